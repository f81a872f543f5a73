//! JSON-Lines chain files.
//!
//! The first line is a header with the format marker, version, chain
//! config, identity registry and the node's pending deletions. Every further
//! line is one block, oldest first.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Chain, ChainError};
use crate::config::ChainConfig;
use crate::model::{Block, EntryRef};
use crate::registry::Registry;

pub const FORMAT: &str = "prunechain";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ChainFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("not a chain file")]
    NotAChainFile,
    #[error("unsupported chain file version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub config: ChainConfig,
    pub registry: Registry,
    #[serde(default)]
    pub pending_deletions: BTreeSet<EntryRef>,
}

pub fn write_chain<W: Write>(chain: &Chain, mut out: W) -> Result<(), ChainFileError> {
    let header = Header {
        format: FORMAT.to_string(),
        version: VERSION,
        config: chain.config().clone(),
        registry: chain.registry().clone(),
        pending_deletions: chain.pending_deletions().clone(),
    };
    serde_json::to_writer(&mut out, &header).map_err(|source| ChainFileError::Json { line: 1, source })?;
    out.write_all(b"\n")?;
    for (i, block) in chain.blocks().iter().enumerate() {
        serde_json::to_writer(&mut out, block).map_err(|source| ChainFileError::Json { line: i + 2, source })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_string(chain: &Chain) -> String {
    let mut buf = Vec::new();
    write_chain(chain, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads a chain file. The blocks are not verified; run
/// [`crate::verify::verify_chain`] on the result.
pub fn read_chain<R: BufRead>(input: R) -> Result<Chain, ChainFileError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let (_, first) = lines.next().ok_or(ChainFileError::NotAChainFile)?;
    let header: Header = serde_json::from_str(&first?).map_err(|source| ChainFileError::Json { line: 1, source })?;
    if header.format != FORMAT {
        return Err(ChainFileError::NotAChainFile);
    }
    if header.version != VERSION {
        return Err(ChainFileError::UnsupportedVersion(header.version));
    }
    let mut blocks = Vec::new();
    for (i, line) in lines {
        let block: Block =
            serde_json::from_str(&line?).map_err(|source| ChainFileError::Json { line: i + 1, source })?;
        blocks.push(block);
    }
    Ok(Chain::from_parts(header.config, header.registry, blocks, header.pending_deletions)?)
}

pub fn from_str(s: &str) -> Result<Chain, ChainFileError> {
    read_chain(s.as_bytes())
}
