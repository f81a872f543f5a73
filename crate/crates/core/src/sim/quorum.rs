//! Quorum-wide checks: majority ballots and summary-hash synchronisation.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ballot::{Ballot, BallotSubject, Vote};
use crate::crypto::Digest;
use crate::model::BlockNumber;
use crate::summarize;

use super::anchor::AnchorNode;
use super::NodeId;

/// A node's own verdict on a ballot subject.
pub fn local_vote(node: &AnchorNode, subject: BallotSubject) -> Vote {
    if node.contrarian {
        return Vote::No;
    }
    let ok = match subject {
        BallotSubject::MarkerShift { new_marker } => summarize::planned_marker(&node.chain) == Some(new_marker),
        BallotSubject::ApproveDeletion { target } => node.chain.is_marked(target),
    };
    if ok {
        Vote::Yes
    } else {
        Vote::No
    }
}

/// Collects every node's local verdict; approved by strict majority.
pub fn hold_ballot(nodes: &[&AnchorNode], subject: BallotSubject) -> Ballot {
    let votes = nodes.iter().map(|n| (n.node_id, local_vote(n, subject))).collect();
    Ballot::tally(subject, nodes.len(), votes)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub hash: Digest,
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SyncStatus {
    InSync {
        hash: Digest,
    },
    /// Largest partition first; ties by lowest node id.
    Fork {
        partitions: Vec<Partition>,
    },
}

impl SyncStatus {
    pub fn is_fork(&self) -> bool {
        matches!(self, SyncStatus::Fork { .. })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum SyncError {
    #[error("nodes {missing:?} have not reached summary height {height}")]
    HeightMismatch { height: BlockNumber, missing: Vec<NodeId> },
}

/// Groups nodes by the hash of the summary block they hold at `height`.
pub fn sync_check(nodes: &[&AnchorNode], height: BlockNumber) -> Result<SyncStatus, SyncError> {
    let missing: Vec<NodeId> =
        nodes.iter().filter(|n| !n.summary_hashes.contains_key(&height)).map(|n| n.node_id).collect();
    if !missing.is_empty() {
        return Err(SyncError::HeightMismatch { height, missing });
    }
    let mut groups: BTreeMap<Digest, Vec<NodeId>> = BTreeMap::new();
    for n in nodes {
        groups.entry(n.summary_hashes[&height]).or_default().push(n.node_id);
    }
    let mut partitions: Vec<Partition> = groups.into_iter().map(|(hash, nodes)| Partition { hash, nodes }).collect();
    partitions.sort_by(|a, b| b.nodes.len().cmp(&a.nodes.len()).then(a.nodes[0].cmp(&b.nodes[0])));
    if partitions.len() == 1 {
        Ok(SyncStatus::InSync { hash: partitions[0].hash })
    } else {
        Ok(SyncStatus::Fork { partitions })
    }
}

/// The latest summary height every node has reached.
pub fn common_summary_height(nodes: &[&AnchorNode]) -> Option<BlockNumber> {
    nodes.iter().map(|n| n.summary_hashes.keys().next_back().copied()).min().flatten()
}
