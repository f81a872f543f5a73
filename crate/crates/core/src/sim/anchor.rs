//! Anchor nodes: full chain copies that propose, validate and vote.

use std::collections::BTreeMap;

use crate::chain::Chain;
use crate::crypto::{Digest, KeyPair};
use crate::deletion::{self, Admission};
use crate::model::{Block, BlockNumber, Entry, SummaryEntry, Tick};
use crate::summarize;

use super::scenario::FaultMode;
use super::{NodeId, SimError};

#[derive(Clone, Debug)]
pub struct AnchorNode {
    pub node_id: NodeId,
    pub chain: Chain,
    pub mempool: Vec<Entry>,
    pub contrarian: bool,
    pub malicious_proposer: bool,
    /// Corruption applied to the next summary this node builds.
    pub pending_corruption: Option<FaultMode>,
    /// Set once the node has built a corrupted summary.
    pub corrupted: bool,
    /// Own hash of every summary block this node built or learned, by height.
    pub summary_hashes: BTreeMap<BlockNumber, Digest>,
    /// Committed blocks this node could not apply while out of sync.
    pub backlog: Vec<Block>,
    pub needs_sync: Option<NodeId>,
    pub awaiting_sync: bool,
}

impl AnchorNode {
    pub fn new(node_id: NodeId, chain: Chain) -> Self {
        AnchorNode {
            node_id,
            chain,
            mempool: Vec::new(),
            contrarian: false,
            malicious_proposer: false,
            pending_corruption: None,
            corrupted: false,
            summary_hashes: BTreeMap::new(),
            backlog: Vec::new(),
            needs_sync: None,
            awaiting_sync: false,
        }
    }

    /// Test hook: any misbehaviour scripted for this node.
    pub fn faulty(&self) -> bool {
        self.contrarian || self.malicious_proposer || self.corrupted || self.pending_corruption.is_some()
    }

    pub fn apply_fault(&mut self, mode: FaultMode) {
        match mode {
            FaultMode::SummaryInject | FaultMode::SummaryAlter => self.pending_corruption = Some(mode),
            FaultMode::Contrarian => self.contrarian = true,
            FaultMode::MaliciousProposer => self.malicious_proposer = true,
        }
    }

    /// Queues a gossiped entry unless it is already queued or stored.
    pub fn receive_entry(&mut self, entry: Entry) {
        let sig = *entry.signature();
        let known = self.mempool.iter().any(|e| *e.signature() == sig)
            || self.chain.live_entries().any(|(_, e)| *e.signature() == sig);
        if !known {
            self.mempool.push(entry);
        }
    }

    pub fn forget_included(&mut self, block: &Block) {
        self.mempool.retain(|e| !block.entries().iter().any(|b| b.signature() == e.signature()));
    }

    pub fn heartbeat(&self, now: Tick) -> Option<Block> {
        let head = self.chain.head();
        let due = now.saturating_sub(head.timestamp) >= self.chain.config().heartbeat_interval;
        (due && self.mempool.is_empty()).then(|| self.chain.seal_empty(now))
    }

    /// Entries of the mempool that are admissible on top of the current head,
    /// in arrival order. Entries referring to others in the same batch wait
    /// for a later block.
    pub fn admissible(&self) -> Vec<Entry> {
        self.mempool.iter().filter(|e| deletion::admit(&self.chain, e) == Admission::Admit).cloned().collect()
    }

    /// The block this node proposes for the next height. `None` when there
    /// is nothing to propose and no heartbeat is due.
    pub fn produce_block(&self, group: &[NodeId], now: Tick) -> Result<Option<Block>, SimError> {
        let height = self.chain.next_number();
        let proposer = proposer_for(height, group);
        if proposer != self.node_id {
            return Err(SimError::NotProposer { height, proposer, node: self.node_id });
        }
        if summarize::needs_summary(self.chain.config(), height) {
            return Ok(None);
        }
        let mut entries = self.admissible();
        if self.malicious_proposer {
            entries.push(forged_entry(self.node_id, now));
        }
        if entries.is_empty() {
            return Ok(self.heartbeat(now));
        }
        Ok(Some(self.chain.seal_normal(entries, now)))
    }

    /// The same block with inadmissible entries removed.
    pub fn filtered(&self, block: &Block) -> Option<Block> {
        let admissible = self.admissible();
        let keep: Vec<Entry> = block
            .entries()
            .iter()
            .filter(|e| admissible.iter().any(|a| a.signature() == e.signature()))
            .cloned()
            .collect();
        if keep.is_empty() {
            self.heartbeat(block.timestamp)
        } else {
            Some(self.chain.seal_normal(keep, block.timestamp))
        }
    }

    /// Carry tampering for a scripted summary corruption.
    pub(crate) fn take_tamper(&mut self) -> Option<impl FnOnce(&mut Vec<SummaryEntry>)> {
        let mode = self.pending_corruption.take()?;
        self.corrupted = true;
        let node = self.node_id;
        let head = self.chain.head().clone();
        Some(move |carry: &mut Vec<SummaryEntry>| match (mode, carry.first_mut()) {
            (FaultMode::SummaryAlter, Some(first)) => {
                if let Entry::Data(d) = &mut first.entry {
                    d.payload.push(b'!');
                }
            }
            _ => carry.push(SummaryEntry {
                origin_block_number: head.number,
                origin_timestamp: head.timestamp,
                origin_entry_number: 999,
                entry: forged_entry(node, head.timestamp),
            }),
        })
    }
}

/// Round-robin proposer for a height within a group of node ids.
pub fn proposer_for(height: BlockNumber, group: &[NodeId]) -> NodeId {
    group[(height % group.len() as u64) as usize]
}

fn forged_entry(node: NodeId, now: Tick) -> Entry {
    let intruder = KeyPair::derive("intruder", node);
    Entry::data(&intruder, "ALPHA", format!("forged@{now}").into_bytes(), None, vec![])
}
