//! A blockchain whose entries can be deleted.
//!
//! Periodic summary blocks carry the surviving entries of the oldest
//! sequences forward, after which those sequences are cut off and the
//! genesis marker moves up. Entries leave the chain when they are deleted on
//! request or expire.

pub mod ballot;
pub mod chain;
pub mod chainfile;
pub mod codec;
pub mod config;
pub mod crypto;
pub mod deletion;
pub mod error;
pub mod merkle;
pub mod model;
pub mod node;
pub mod registry;
pub mod render;
pub mod sim;
pub mod summarize;
pub mod verify;

pub use ballot::{Ballot, BallotSubject, Vote};
pub use chain::{AppendError, Chain, ChainError, Found, Location, FIXTURE_GENESIS_PREVIOUS_HASH};
pub use config::ChainConfig;
pub use crypto::{Digest, KeyPair, PublicKey, Signature};
pub use model::{Block, BlockBody, BlockKind, BlockNumber, Cosignature, Entry, EntryRef, Expiry, SummaryEntry, Tick};
pub use registry::{Registry, Role};
pub use verify::{verify_chain, Verdict};
