//! The live chain: blocks from the genesis marker to the head.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::codec::Canonical;
use crate::config::ChainConfig;
use crate::crypto::Digest;
use crate::deletion::{self, Admission, DeletionDecision};
use crate::error::ConfigError;
use crate::model::{Block, BlockBody, BlockKind, BlockNumber, Entry, EntryRef, Tick};
use crate::registry::Registry;
use crate::summarize::needs_summary;

/// Previous-hash of the reference genesis block: `DEADB` followed by zero
/// bytes, so the five-digit console form reads `deadb`.
pub const FIXTURE_GENESIS_PREVIOUS_HASH: Digest = {
    let mut bytes = [0u8; 32];
    bytes[0] = 0xde;
    bytes[1] = 0xad;
    bytes[2] = 0xb0;
    Digest(bytes)
};

/// Where a looked-up entry currently lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "in", rename_all = "snake_case")]
pub enum Location {
    /// Still in the normal block it was appended to.
    Live { block: BlockNumber },
    /// Carried into a summary block.
    InSummary { summary_block: BlockNumber },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Found<'a> {
    pub entry: &'a Entry,
    pub location: Location,
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "error", rename_all = "kebab-case")]
pub enum AppendError {
    #[error("expected block number {expected}, got {got}")]
    OutOfOrder { expected: BlockNumber, got: BlockNumber },
    #[error("previous hash does not match head")]
    PreviousHashMismatch,
    #[error("own hash does not recompute")]
    HashMismatch,
    #[error("block {0} is a summary position and must be built locally")]
    SummaryPosition(BlockNumber),
    #[error("summary blocks cannot be appended from outside")]
    ForeignSummary,
    #[error("timestamp {got} precedes head timestamp {head}")]
    TimestampRegression { head: Tick, got: Tick },
    #[error("entry {index} rejected: {reason}")]
    EntryRejected { index: usize, reason: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("a chain needs at least one block")]
    NoBlocks,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
    config: ChainConfig,
    registry: Registry,
    pending_deletions: BTreeSet<EntryRef>,
}

impl Chain {
    /// Starts a chain with an empty normal genesis block numbered 0.
    pub fn new(
        config: ChainConfig,
        registry: Registry,
        genesis_previous_hash: Digest,
        timestamp: Tick,
    ) -> Result<Self, ChainError> {
        config.validate()?;
        let genesis = Block::normal(0, timestamp, genesis_previous_hash, Vec::new());
        Ok(Chain { blocks: vec![genesis], config, registry, pending_deletions: BTreeSet::new() })
    }

    /// Reassembles a chain, e.g. one read from a chain file. The blocks are
    /// not checked here; run [`crate::verify::verify_chain`] on the result.
    pub fn from_parts(
        config: ChainConfig,
        registry: Registry,
        blocks: Vec<Block>,
        pending_deletions: BTreeSet<EntryRef>,
    ) -> Result<Self, ChainError> {
        config.validate()?;
        if blocks.is_empty() {
            return Err(ChainError::NoBlocks);
        }
        Ok(Chain { blocks, config, registry, pending_deletions })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut Registry {
        &mut self.registry
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Block number of the current genesis.
    pub fn marker(&self) -> BlockNumber {
        self.blocks[0].number
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("chain is never empty")
    }

    pub fn next_number(&self) -> BlockNumber {
        self.head().number + 1
    }

    /// Live length: blocks from the marker to the head, inclusive.
    pub fn len(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block(&self, number: BlockNumber) -> Option<&Block> {
        let idx = number.checked_sub(self.marker())?;
        self.blocks.get(usize::try_from(idx).ok()?)
    }

    pub fn pending_deletions(&self) -> &BTreeSet<EntryRef> {
        &self.pending_deletions
    }

    pub fn is_marked(&self, r: EntryRef) -> bool {
        self.pending_deletions.contains(&r)
    }

    pub(crate) fn mark_for_deletion(&mut self, r: EntryRef) {
        self.pending_deletions.insert(r);
    }

    pub(crate) fn unmark(&mut self, r: EntryRef) -> bool {
        self.pending_deletions.remove(&r)
    }

    /// Finds an entry by its original coordinates, looking at normal blocks
    /// and at entries carried into summary blocks.
    pub fn lookup_entry(&self, r: EntryRef) -> Option<Found<'_>> {
        if let Some(block) = self.block(r.block_number) {
            if block.kind() == BlockKind::Normal {
                let idx = usize::try_from(r.entry_number).ok()?;
                return block
                    .entries()
                    .get(idx)
                    .map(|entry| Found { entry, location: Location::Live { block: block.number } });
            }
            return None;
        }
        self.blocks.iter().filter(|b| b.is_summary()).find_map(|b| {
            b.summary_entries()
                .iter()
                .find(|se| se.origin() == r)
                .map(|se| Found { entry: &se.entry, location: Location::InSummary { summary_block: b.number } })
        })
    }

    /// Every data or request entry currently stored, with its original
    /// coordinates, in chain order.
    pub fn live_entries(&self) -> impl Iterator<Item = (EntryRef, &Entry)> + '_ {
        self.blocks.iter().flat_map(|b| {
            let normal = b.entries().iter().enumerate().map(move |(i, e)| (EntryRef::new(b.number, i as u64), e));
            let carried = b.summary_entries().iter().map(|se| (se.origin(), &se.entry));
            normal.chain(carried)
        })
    }

    /// SHA-256 over the canonical bytes of every live block in order.
    pub fn digest(&self) -> Digest {
        let bytes: Vec<Vec<u8>> = self.blocks.iter().map(Canonical::canonical_bytes).collect();
        let parts: Vec<&[u8]> = bytes.iter().map(Vec::as_slice).collect();
        Digest::of_parts(&parts)
    }

    /// Seals a normal block on top of the head.
    pub fn seal_normal(&self, entries: Vec<Entry>, timestamp: Tick) -> Block {
        Block::normal(self.next_number(), timestamp, self.head().own_hash, entries)
    }

    pub fn seal_empty(&self, timestamp: Tick) -> Block {
        Block::seal(self.next_number(), timestamp, self.head().own_hash, BlockBody::Empty)
    }

    /// Validates a proposed normal or empty block against the head and, if
    /// it is acceptable, appends it. Deletion requests in the block are
    /// processed immediately, so the pending set stays a pure function of
    /// the chain contents.
    pub fn append(&mut self, block: Block) -> Result<Vec<DeletionDecision>, AppendError> {
        self.check_append(&block)?;
        let number = block.number;
        let requests: Vec<EntryRef> = block
            .entries()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.as_delete_request().is_some())
            .map(|(i, _)| EntryRef::new(number, i as u64))
            .collect();
        self.blocks.push(block);
        Ok(requests.into_iter().map(|loc| deletion::process_delete_request(self, loc, &[])).collect())
    }

    pub fn check_append(&self, block: &Block) -> Result<(), AppendError> {
        let head = self.head();
        if block.number != head.number + 1 {
            return Err(AppendError::OutOfOrder { expected: head.number + 1, got: block.number });
        }
        if block.previous_hash != head.own_hash {
            return Err(AppendError::PreviousHashMismatch);
        }
        if !block.hash_is_valid() {
            return Err(AppendError::HashMismatch);
        }
        if block.is_summary() {
            return Err(AppendError::ForeignSummary);
        }
        if needs_summary(&self.config, block.number) {
            return Err(AppendError::SummaryPosition(block.number));
        }
        if block.timestamp < head.timestamp {
            return Err(AppendError::TimestampRegression { head: head.timestamp, got: block.timestamp });
        }
        for (index, entry) in block.entries().iter().enumerate() {
            let verdict = match entry {
                Entry::Data(_) => deletion::admit_transaction(self, entry),
                Entry::DeleteRequest(_) => deletion::admit_delete_request(self, entry),
            };
            if let Admission::Reject(reason) = verdict {
                return Err(AppendError::EntryRejected { index, reason: reason.code().to_string() });
            }
        }
        Ok(())
    }

    /// Appends a locally built summary block. Callers guarantee the block is
    /// well-formed; see [`crate::summarize`].
    pub(crate) fn push_summary(&mut self, block: Block) {
        debug_assert!(block.is_summary());
        debug_assert_eq!(block.number, self.next_number());
        self.blocks.push(block);
    }

    /// Drops every block below `new_marker` and forgets pending deletions
    /// whose target no longer resolves.
    pub(crate) fn cut_below(&mut self, new_marker: BlockNumber) {
        let drop = (new_marker - self.marker()) as usize;
        self.blocks.drain(..drop);
        self.forget_unresolvable();
    }

    pub(crate) fn forget_unresolvable(&mut self) {
        let pending: Vec<EntryRef> = self.pending_deletions.iter().copied().collect();
        for r in pending {
            if self.lookup_entry(r).is_none() {
                self.pending_deletions.remove(&r);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyPair;

    fn chain() -> (Chain, KeyPair) {
        let kp = KeyPair::derive("ALPHA", 0);
        let mut reg = Registry::new();
        reg.register_user("ALPHA", kp.public()).unwrap();
        let chain = Chain::new(ChainConfig::new(3, 5), reg, FIXTURE_GENESIS_PREVIOUS_HASH, 0).unwrap();
        (chain, kp)
    }

    #[test]
    fn fixture_genesis_displays_deadb() {
        assert_eq!(FIXTURE_GENESIS_PREVIOUS_HASH.short(), "deadb");
        let (c, _) = chain();
        assert_eq!(c.marker(), 0);
        assert_eq!(c.len(), 1);
        assert_eq!(c.head().previous_hash.short(), "deadb");
    }

    #[test]
    fn append_rejects_bad_links() {
        let (mut c, kp) = chain();
        let e = Entry::data(&kp, "ALPHA", b"login".to_vec(), None, vec![]);
        let mut b = c.seal_normal(vec![e.clone()], 1);
        b.previous_hash = Digest::ZERO;
        assert_eq!(c.append(b), Err(AppendError::PreviousHashMismatch));
        let b = Block::normal(5, 1, c.head().own_hash, vec![e.clone()]);
        assert!(matches!(c.append(b), Err(AppendError::OutOfOrder { expected: 1, got: 5 })));
        let mut b = c.seal_normal(vec![e], 1);
        b.timestamp = 2;
        assert_eq!(c.append(b), Err(AppendError::HashMismatch));
    }

    #[test]
    fn append_refuses_summary_position() {
        let (mut c, kp) = chain();
        c.append(c.seal_normal(vec![], 1)).unwrap();
        let e = Entry::data(&kp, "ALPHA", b"login".to_vec(), None, vec![]);
        assert_eq!(c.append(c.seal_normal(vec![e], 2)), Err(AppendError::SummaryPosition(2)));
    }

    #[test]
    fn append_rejects_unknown_user() {
        let (mut c, _) = chain();
        let stranger = KeyPair::derive("ZULU", 0);
        let e = Entry::data(&stranger, "ZULU", b"x".to_vec(), None, vec![]);
        assert!(matches!(c.append(c.seal_normal(vec![e], 1)), Err(AppendError::EntryRejected { index: 0, .. })));
    }

    #[test]
    fn lookup_live_and_missing() {
        let (mut c, kp) = chain();
        let e = Entry::data(&kp, "ALPHA", b"login".to_vec(), None, vec![]);
        c.append(c.seal_normal(vec![e.clone()], 1)).unwrap();
        let found = c.lookup_entry(EntryRef::new(1, 0)).unwrap();
        assert_eq!(found.entry, &e);
        assert_eq!(found.location, Location::Live { block: 1 });
        assert!(c.lookup_entry(EntryRef::new(1, 1)).is_none());
        assert!(c.lookup_entry(EntryRef::new(999, 0)).is_none());
    }
}
