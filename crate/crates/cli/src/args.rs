use std::path::PathBuf;

use clap::{Parser, Subcommand};
use prunechain::model::{BlockNumber, EntryRef, Tick};

/// Audit log on a blockchain whose entries can be deleted.
#[derive(Debug, Parser)]
#[command(name = "prunechain", version)]
pub struct Cli {
    /// Chain file (JSON-Lines).
    #[arg(long, global = true, default_value = "chain.jsonl")]
    pub chain: PathBuf,
    /// Chain parameters as YAML, used by `init`, `import` and `simulate`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Payload schema as YAML. `init` stores it with the session.
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    /// Key file of the signing user.
    #[arg(long, global = true)]
    pub key: Option<PathBuf>,
    /// Seed for derived keys, random genesis hashes and simulations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a chain file holding only the genesis block.
    Init {
        /// Random previous hash for the genesis block instead of the DEADB fixture.
        #[arg(long)]
        random_genesis: bool,
        #[arg(long, default_value_t = 0)]
        timestamp: Tick,
        /// Replace an existing chain file.
        #[arg(long)]
        force: bool,
    },
    /// Create a signing key and register it with the chain.
    Keygen {
        user: String,
        /// Register the key as the quorum's administrative key.
        #[arg(long)]
        admin: bool,
        /// Where to write the key file. Defaults to `<USER>.key` next to the chain.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sign a data entry and queue it for the next block.
    Append {
        #[arg(long)]
        user: Option<String>,
        /// Payload as YAML.
        #[arg(long, required_unless_present = "payload_file", conflicts_with = "payload_file")]
        payload: Option<String>,
        #[arg(long)]
        payload_file: Option<PathBuf>,
        /// Drop the entry once this tick has passed.
        #[arg(long, conflicts_with = "expire_block")]
        expire_time: Option<Tick>,
        /// Drop the entry once the chain has grown past this block.
        #[arg(long)]
        expire_block: Option<BlockNumber>,
        /// Entry this one depends on, as `<block>.<entry>`.
        #[arg(long = "depends-on")]
        depends_on: Vec<EntryRef>,
    },
    /// Sign a deletion request and queue it for the next block.
    DeleteRequest {
        #[arg(long)]
        user: Option<String>,
        /// Entry to delete, as `<block>.<entry>`.
        #[arg(long)]
        target: EntryRef,
        /// Key file of a dependent entry's owner who agrees to the deletion.
        #[arg(long = "cosign")]
        cosign: Vec<PathBuf>,
        /// Queue the request even if it will have no effect.
        #[arg(long)]
        force: bool,
    },
    /// Advance the clock, producing blocks, summaries and prunes.
    Tick {
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Fail with exit status 4 when a guard blocks a due prune.
        #[arg(long)]
        strict: bool,
    },
    /// Print the live chain, one line per block.
    Show {
        /// Highlight summary blocks.
        #[arg(long)]
        color: bool,
    },
    /// Verify hashes, links, summary positions and signatures.
    Verify,
    /// Run the anchor-node simulator on a scenario file.
    Simulate {
        /// YAML: a full simulation config, or just a list of scripted events.
        scenario: PathBuf,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        duration: Option<Tick>,
        /// Write the JSON-Lines trace here instead of stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write the chain file to stdout or a file.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace the chain with a verified copy of an exported chain file.
    Import {
        file: PathBuf,
        #[arg(long)]
        force: bool,
    },
}
