//! Simulation traces, written as JSON Lines.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ballot::Ballot;
use crate::crypto::Digest;
use crate::deletion::DeletionDecision;
use crate::model::{BlockKind, BlockNumber, Tick};
use crate::summarize::{GuardFailure, PruneReport};

use super::quorum::{SyncError, SyncStatus};
use super::scenario::ScenarioEvent;
use super::NodeId;

pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    SubmitEntry,
    ProposeBlock,
    SummaryHashAnnounce,
    BallotRequest,
    BallotVote,
    SyncRequest,
    SyncResponse,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeSnapshot {
    pub node: NodeId,
    pub head: BlockNumber,
    pub head_hash: Digest,
    pub marker: BlockNumber,
    pub digest: Digest,
    pub faulty: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Script {
        #[serde(flatten)]
        step: ScenarioEvent,
    },
    Message {
        kind: MessageKind,
        sender: NodeId,
        to: NodeId,
        deliver_at: Tick,
        #[serde(skip_serializing_if = "std::ops::Not::not")]
        dropped: bool,
    },
    Block {
        height: BlockNumber,
        kind: BlockKind,
        proposer: NodeId,
        hash: Digest,
        entries: usize,
        accepted_by: Vec<NodeId>,
    },
    ProposalRejected {
        height: BlockNumber,
        proposer: NodeId,
        yes: usize,
        no: usize,
    },
    Summary {
        height: BlockNumber,
        hashes: BTreeMap<NodeId, Digest>,
    },
    Prune {
        node: NodeId,
        report: PruneReport,
    },
    GuardBlocked {
        node: NodeId,
        height: BlockNumber,
        guard: GuardFailure,
    },
    Ballot {
        ballot: Ballot,
    },
    Deletion {
        node: NodeId,
        decision: DeletionDecision,
    },
    SummaryMismatch {
        node: NodeId,
        from: NodeId,
        height: BlockNumber,
    },
    Sync {
        height: BlockNumber,
        #[serde(flatten)]
        status: SyncStatus,
    },
    SyncFailed {
        #[serde(flatten)]
        error: SyncError,
    },
    Resync {
        node: NodeId,
        from: NodeId,
        head: BlockNumber,
    },
    Final {
        nodes: Vec<NodeSnapshot>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceLine {
    pub v: u32,
    pub t: Tick,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub lines: Vec<TraceLine>,
}

impl Trace {
    pub fn push(&mut self, t: Tick, event: TraceEvent) {
        self.lines.push(TraceLine { v: TRACE_VERSION, t, event });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&serde_json::to_string(line).expect("trace lines serialize"));
            out.push('\n');
        }
        out
    }

    pub fn events(&self) -> impl Iterator<Item = &TraceEvent> {
        self.lines.iter().map(|l| &l.event)
    }

    /// Every sync check result with its height.
    pub fn sync_results(&self) -> impl Iterator<Item = (BlockNumber, &SyncStatus)> {
        self.events().filter_map(|e| match e {
            TraceEvent::Sync { height, status } => Some((*height, status)),
            _ => None,
        })
    }

    pub fn final_nodes(&self) -> Option<&[NodeSnapshot]> {
        self.lines.iter().rev().find_map(|l| match &l.event {
            TraceEvent::Final { nodes } => Some(nodes.as_slice()),
            _ => None,
        })
    }
}
