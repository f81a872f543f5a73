//! Majority votes of the anchor-node quorum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{BlockNumber, EntryRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "subject", rename_all = "snake_case")]
pub enum BallotSubject {
    MarkerShift { new_marker: BlockNumber },
    ApproveDeletion { target: EntryRef },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Yes,
    No,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub subject: BallotSubject,
    pub quorum_size: usize,
    pub votes: BTreeMap<u64, Vote>,
    pub approved: bool,
}

impl Ballot {
    /// Approved iff strictly more than half of the quorum voted yes.
    /// Missing votes count as no.
    pub fn tally(subject: BallotSubject, quorum_size: usize, votes: BTreeMap<u64, Vote>) -> Self {
        let yes = votes.values().filter(|v| **v == Vote::Yes).count();
        Ballot { subject, quorum_size, votes, approved: yes * 2 > quorum_size }
    }

    /// The trivially approving ballot of a single-node deployment.
    pub fn single_node(subject: BallotSubject) -> Self {
        Self::tally(subject, 1, BTreeMap::from([(0, Vote::Yes)]))
    }

    pub fn yes_votes(&self) -> usize {
        self.votes.values().filter(|v| **v == Vote::Yes).count()
    }
}
