//! A single-node driver: a logical clock, a mempool and one block per tick.

use serde::Serialize;
use thiserror::Error;

use crate::chain::{AppendError, Chain};
use crate::crypto::KeyPair;
use crate::deletion::{self, Admission, DeletionDecision, RejectReason};
use crate::model::{BlockNumber, Entry, Tick};
use crate::registry::Registry;
use crate::summarize::{self, GuardFailure, PruneReport, SummarizeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NodeError {
    #[error("entry rejected: {}", .0.code())]
    Rejected(RejectReason),
    #[error(transparent)]
    Append(#[from] AppendError),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
}

/// What one tick produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "produced", rename_all = "snake_case")]
pub enum TickOutcome {
    Normal {
        block: BlockNumber,
        decisions: Vec<DeletionDecision>,
        /// Queued entries that stopped being admissible, e.g. because a
        /// summary dropped what they depend on.
        #[serde(skip_serializing_if = "Vec::is_empty")]
        evicted: Vec<RejectReason>,
    },
    Empty {
        block: BlockNumber,
    },
    Summary {
        block: BlockNumber,
        #[serde(skip_serializing_if = "Option::is_none")]
        prune: Option<PruneReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        guard_blocked: Option<GuardFailure>,
    },
    Idle,
}

impl TickOutcome {
    pub fn block(&self) -> Option<BlockNumber> {
        match self {
            TickOutcome::Normal { block, .. } | TickOutcome::Empty { block } | TickOutcome::Summary { block, .. } => {
                Some(*block)
            }
            TickOutcome::Idle => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    chain: Chain,
    pub clock: Tick,
    pub mempool: Vec<Entry>,
}

impl Node {
    pub fn new(chain: Chain) -> Self {
        let clock = chain.head().timestamp;
        Node { chain, clock, mempool: Vec::new() }
    }

    /// Reattaches saved clock and mempool to a chain.
    pub fn resume(chain: Chain, clock: Tick, mempool: Vec<Entry>) -> Self {
        Node { chain, clock, mempool }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn chain_mut(&mut self) -> &mut Chain {
        &mut self.chain
    }

    pub fn into_chain(self) -> Chain {
        self.chain
    }

    /// Queues an entry after checking it against the current chain.
    pub fn submit(&mut self, entry: Entry) -> Result<(), NodeError> {
        if let Admission::Reject(reason) = deletion::admit(self.chain(), &entry) {
            return Err(NodeError::Rejected(reason));
        }
        self.mempool.push(entry);
        Ok(())
    }

    /// Advances the clock by one and produces at most one block: the due
    /// summary block, else a normal block with the mempool, else an empty
    /// heartbeat block once the head is `heartbeat_interval` old. Queued
    /// entries are checked again before sealing.
    pub fn tick(&mut self) -> Result<TickOutcome, NodeError> {
        self.clock += 1;
        let chain = &mut self.chain;
        if summarize::needs_summary(chain.config(), chain.next_number()) {
            let out = summarize::close_sequence(chain)?;
            return Ok(TickOutcome::Summary {
                block: out.block_number,
                prune: out.report,
                guard_blocked: out.guard_blocked,
            });
        }
        let mut evicted = Vec::new();
        let mut entries = Vec::new();
        for entry in std::mem::take(&mut self.mempool) {
            match deletion::admit(chain, &entry) {
                Admission::Admit => entries.push(entry),
                Admission::Reject(reason) => evicted.push(reason),
            }
        }
        if !entries.is_empty() {
            let block = chain.seal_normal(entries, self.clock);
            let number = block.number;
            let decisions = chain.append(block)?;
            return Ok(TickOutcome::Normal { block: number, decisions, evicted });
        }
        if self.clock - chain.head().timestamp >= chain.config().heartbeat_interval {
            let block = chain.seal_empty(self.clock);
            let number = block.number;
            chain.append(block)?;
            return Ok(TickOutcome::Empty { block: number });
        }
        Ok(TickOutcome::Idle)
    }

    pub fn tick_n(&mut self, n: u64) -> Result<Vec<TickOutcome>, NodeError> {
        (0..n).map(|_| self.tick()).collect()
    }
}

/// The three-user login walkthrough: logins in blocks 1, 3 and 4, BRAVO's
/// request to delete its login in block 3, then idle ticks.
pub mod walkthrough {
    use super::*;
    use crate::chain::FIXTURE_GENESIS_PREVIOUS_HASH;
    use crate::config::ChainConfig;
    use crate::model::EntryRef;

    pub const USERS: [&str; 3] = ["ALPHA", "BRAVO", "CHARLIE"];
    pub const ADMIN: &str = "QUORUM";
    pub const SEED: u64 = 0;

    pub fn config() -> ChainConfig {
        ChainConfig {
            delta_l: 3,
            l_max: 5,
            l_min: 3,
            min_summary_blocks: 1,
            min_time_coverage: 0,
            heartbeat_interval: 1,
            redundancy_enabled: false,
        }
    }

    pub fn keys(user: &str) -> KeyPair {
        KeyPair::derive(user, SEED)
    }

    pub fn registry() -> Registry {
        let mut reg = Registry::new();
        for u in USERS {
            reg.register_user(u, keys(u).public()).expect("distinct fixture users");
        }
        reg.set_admin(ADMIN, keys(ADMIN).public()).expect("distinct admin key");
        reg
    }

    pub fn login(user: &str, terminal: u32) -> Entry {
        let payload = format!(r#"{{"event":"login","terminal":"tty{terminal}","user":"{}"}}"#, user.to_lowercase());
        Entry::data(&keys(user), user, payload.into_bytes(), None, vec![])
    }

    pub fn genesis() -> Node {
        Node::new(Chain::new(config(), registry(), FIXTURE_GENESIS_PREVIOUS_HASH, 0).expect("fixture config is valid"))
    }

    /// The chains at the three checkpoints.
    pub struct Checkpoints {
        /// Blocks 0 to 7, empty summaries at 2 and 5, request in block 6.
        pub after_logins: Chain,
        /// Sequences 1 and 2 merged into summary 8, marker at 6.
        pub after_prune: Chain,
        /// One prune later: the request is gone.
        pub one_cycle_later: Chain,
    }

    pub fn run() -> Checkpoints {
        let mut node = genesis();
        for (block, terminal) in [(1u64, 1u32), (3, 2), (4, 3)] {
            while node.chain().next_number() < block {
                node.tick().expect("idle tick");
            }
            for user in USERS {
                node.submit(login(user, terminal)).expect("login admitted");
            }
            node.tick().expect("login block");
        }
        node.tick().expect("summary 5");
        node.submit(deletion::make_delete_request(&keys("BRAVO"), "BRAVO", EntryRef::new(3, 1)))
            .expect("request admitted");
        node.tick().expect("request block");
        node.tick().expect("heartbeat");
        let after_logins = node.chain().clone();
        node.tick().expect("summary 8");
        let after_prune = node.chain().clone();
        while node.chain().marker() == after_prune.marker() {
            node.tick().expect("idle tick");
        }
        Checkpoints { after_logins, after_prune, one_cycle_later: node.into_chain() }
    }
}
