//! Chain verification from the genesis marker to the head.

use serde::Serialize;

use crate::chain::Chain;
use crate::merkle::compute_merkle_root;
use crate::model::{BlockKind, BlockNumber, Entry};
use crate::summarize::{needs_summary, sequence_entries, sequence_start};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BrokenReason {
    MisalignedMarker,
    NumberGap,
    HashMismatch,
    LinkMismatch,
    TimestampRegression,
    SummaryTimestamp,
    MissingSummary,
    MisplacedSummary,
    RequestInSummary,
    UnknownUser,
    BadSignature,
}

impl BrokenReason {
    pub fn code(&self) -> &'static str {
        match self {
            BrokenReason::MisalignedMarker => "misaligned-marker",
            BrokenReason::NumberGap => "number-gap",
            BrokenReason::HashMismatch => "hash-mismatch",
            BrokenReason::LinkMismatch => "link-mismatch",
            BrokenReason::TimestampRegression => "timestamp-regression",
            BrokenReason::SummaryTimestamp => "summary-timestamp",
            BrokenReason::MissingSummary => "missing-summary",
            BrokenReason::MisplacedSummary => "misplaced-summary",
            BrokenReason::RequestInSummary => "request-in-summary",
            BrokenReason::UnknownUser => "unknown-user",
            BrokenReason::BadSignature => "bad-signature",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Broken { at: BlockNumber, reason: BrokenReason },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Accepts the chain only if it is traceable from its marker to the head:
/// consecutive numbers, recomputing hashes, intact links, summary blocks
/// exactly at the periodic positions carrying their predecessor's
/// timestamp, and every entry signed by its registered user.
pub fn verify_chain(chain: &Chain) -> Verdict {
    let config = chain.config();
    let blocks = chain.blocks();
    let broken = |at, reason| Verdict::Broken { at, reason };

    if sequence_start(config, chain.marker()) != chain.marker() {
        return broken(chain.marker(), BrokenReason::MisalignedMarker);
    }
    for (i, block) in blocks.iter().enumerate() {
        let at = block.number;
        if let Some(prev) = i.checked_sub(1).map(|p| &blocks[p]) {
            if block.number != prev.number + 1 {
                return broken(at, BrokenReason::NumberGap);
            }
        }
        if !block.hash_is_valid() {
            return broken(at, BrokenReason::HashMismatch);
        }
        if let Some(prev) = i.checked_sub(1).map(|p| &blocks[p]) {
            if block.previous_hash != prev.own_hash {
                return broken(at, BrokenReason::LinkMismatch);
            }
            if block.timestamp < prev.timestamp {
                return broken(at, BrokenReason::TimestampRegression);
            }
            if block.is_summary() && block.timestamp != prev.timestamp {
                return broken(at, BrokenReason::SummaryTimestamp);
            }
        }
        match (needs_summary(config, block.number), block.kind()) {
            (true, BlockKind::Summary) | (false, BlockKind::Normal | BlockKind::Empty) => {}
            (true, _) => return broken(at, BrokenReason::MissingSummary),
            (false, BlockKind::Summary) => return broken(at, BrokenReason::MisplacedSummary),
        }
        if block.summary_entries().iter().any(|se| !matches!(se.entry, Entry::Data(_))) {
            return broken(at, BrokenReason::RequestInSummary);
        }
        let entries = block.entries().iter().chain(block.summary_entries().iter().map(|se| &se.entry));
        for entry in entries {
            let Some(key) = chain.registry().key_of(entry.user()) else {
                return broken(at, BrokenReason::UnknownUser);
            };
            if !entry.verify_signature(key) {
                return broken(at, BrokenReason::BadSignature);
            }
        }
    }
    Verdict::Valid
}

/// Findings of the extended audit beyond [`verify_chain`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub verdict: Option<Verdict>,
    /// Redundancy references recomputed against a still-live sequence.
    pub redundancy_checked: usize,
    /// Summary blocks whose redundancy reference does not match.
    pub redundancy_mismatches: Vec<BlockNumber>,
    /// Redundancy references whose sequence has been pruned already.
    pub redundancy_unverifiable: usize,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.verdict.as_ref().is_some_and(Verdict::is_valid) && self.redundancy_mismatches.is_empty()
    }
}

/// [`verify_chain`] plus recomputation of every redundancy Merkle root whose
/// sequence is still fully live.
pub fn audit_chain(chain: &Chain) -> AuditReport {
    let mut report = AuditReport { verdict: Some(verify_chain(chain)), ..Default::default() };
    let delta = chain.config().delta_l;
    for block in chain.blocks().iter().filter(|b| b.is_summary()) {
        let Some(r) = block.redundancy() else { continue };
        let first = (r.sequence_index - 1) * delta;
        let last = first + delta - 1;
        if first < chain.marker() || last >= block.number {
            report.redundancy_unverifiable += 1;
            continue;
        }
        report.redundancy_checked += 1;
        if compute_merkle_root(&sequence_entries(chain, first, last)) != r.merkle_root {
            report.redundancy_mismatches.push(block.number);
        }
    }
    report
}
