//! Sequences, summary blocks and pruning.
//!
//! Block numbers never reset, so the summary positions are a function of the
//! absolute block number alone: block `α` closes a sequence iff
//! `(α + 1) % delta_l == 0`. Every node therefore agrees on where summaries
//! go without exchanging them, and the positions survive marker shifts.
//!
//! When the live chain is longer than `l_max` at a summary position, the
//! oldest complete sequences are merged into the new summary block and cut
//! off. The live length then satisfies
//! `l_new = l_old + 1 - Σ merged lengths`, the `+1` being the new summary.

use serde::Serialize;
use thiserror::Error;

use crate::ballot::{Ballot, BallotSubject};
use crate::chain::Chain;
use crate::config::ChainConfig;
use crate::crypto::Digest;
use crate::merkle::compute_merkle_root;
use crate::model::{Block, BlockBody, BlockNumber, Entry, EntryRef, Expiry, RedundancyRef, SummaryEntry, Tick};
use crate::verify::{verify_chain, BrokenReason, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SummarizeError {
    #[error("chain is broken at block {at}: {}", reason.code())]
    InvalidChain { at: BlockNumber, reason: BrokenReason },
    #[error("pruning blocked by guard: {0}")]
    GuardViolation(GuardFailure),
    #[error("block {0} is not a summary position")]
    NotAtSummaryPosition(BlockNumber),
    #[error("chain length {len} does not exceed l_max {l_max}")]
    NotOverLimit { len: u64, l_max: u64 },
    #[error("marker shift was not approved by the quorum")]
    VoteRejected,
    #[error("block {0} is not the start of a live sequence")]
    InvalidMarker(BlockNumber),
    #[error("redundancy needs a complete sequence")]
    NotEnoughSequences,
}

/// A run of `delta_l` blocks closed by a summary block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Sequence {
    /// 1-based position among live sequences; 1 is the oldest.
    pub index: u64,
    /// 1-based absolute sequence number, stable across pruning.
    pub number: u64,
    pub first_block: BlockNumber,
    /// The closing summary block, or the head for a partial sequence.
    pub last_block: BlockNumber,
    pub length: u64,
    /// False for the trailing sequence whose summary is not built yet.
    pub complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    DeletedOnRequest,
    ExpiredByTime,
    ExpiredByBlock,
    DeletionRequestNeverCopied,
}

impl DropReason {
    pub fn code(&self) -> &'static str {
        match self {
            DropReason::DeletedOnRequest => "deleted-on-request",
            DropReason::ExpiredByTime => "expired-by-time",
            DropReason::ExpiredByBlock => "expired-by-block",
            DropReason::DeletionRequestNeverCopied => "deletion-request-never-copied",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DroppedEntry {
    pub entry: EntryRef,
    pub reason: DropReason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "guard", rename_all = "kebab-case")]
pub enum GuardFailure {
    Length { remaining: u64, l_min: u64 },
    SummaryBlocks { remaining: u64, min_summary_blocks: u64 },
    TimeCoverage { covered: Tick, min_time_coverage: Tick },
    NothingToPrune,
}

impl std::fmt::Display for GuardFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GuardFailure::Length { remaining, l_min } => {
                write!(f, "would leave {remaining} blocks, minimum is {l_min}")
            }
            GuardFailure::SummaryBlocks { remaining, min_summary_blocks } => {
                write!(f, "would leave {remaining} summary blocks, minimum is {min_summary_blocks}")
            }
            GuardFailure::TimeCoverage { covered, min_time_coverage } => {
                write!(f, "would cover {covered} ticks, minimum is {min_time_coverage}")
            }
            GuardFailure::NothingToPrune => f.write_str("no complete sequence to prune"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "failure", rename_all = "snake_case")]
pub enum GuardVerdict {
    Pass,
    Fail(GuardFailure),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpiryVerdict {
    Keep,
    Drop(DropReason),
}

/// Output of [`merge_oldest`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Merge {
    pub carry: Vec<SummaryEntry>,
    pub merged: Vec<Sequence>,
    pub dropped: Vec<DroppedEntry>,
    /// Set when a guard stopped the merge before the chain got back under
    /// `l_max`.
    pub stopped_by: Option<GuardFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PruneReport {
    pub merged_sequences: Vec<Sequence>,
    pub dropped_entries: Vec<DroppedEntry>,
    pub old_marker: BlockNumber,
    pub new_marker: BlockNumber,
    pub old_length: u64,
    pub new_length: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_block: Option<BlockNumber>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopped_by: Option<GuardFailure>,
}

impl PruneReport {
    fn unchanged(chain: &Chain) -> Self {
        PruneReport {
            merged_sequences: Vec::new(),
            dropped_entries: Vec::new(),
            old_marker: chain.marker(),
            new_marker: chain.marker(),
            old_length: chain.len(),
            new_length: chain.len(),
            summary_block: None,
            stopped_by: None,
        }
    }

    pub fn is_noop(&self) -> bool {
        self.merged_sequences.is_empty()
    }

    pub fn merged_length(&self) -> u64 {
        self.merged_sequences.iter().map(|s| s.length).sum()
    }
}

/// What happened when a node closed a sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SummaryOutcome {
    pub block_number: BlockNumber,
    pub hash: Digest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PruneReport>,
    /// The chain was over `l_max` but a guard forbade pruning.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard_blocked: Option<GuardFailure>,
    /// The vote on the marker shift, when one was held.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ballot: Option<Ballot>,
}

pub fn needs_summary(config: &ChainConfig, next_block_number: BlockNumber) -> bool {
    (next_block_number + 1).is_multiple_of(config.delta_l)
}

pub fn sequence_start(config: &ChainConfig, number: BlockNumber) -> BlockNumber {
    number - number % config.delta_l
}

/// Absolute 1-based number of the sequence containing `number`.
pub fn sequence_number(config: &ChainConfig, number: BlockNumber) -> u64 {
    number / config.delta_l + 1
}

/// Partition of the live chain into sequences, oldest first.
pub fn sequence_boundaries(chain: &Chain) -> Result<Vec<Sequence>, SummarizeError> {
    check_valid(chain)?;
    Ok(live_sequences(chain))
}

pub(crate) fn live_sequences(chain: &Chain) -> Vec<Sequence> {
    let delta = chain.config().delta_l;
    let head = chain.head().number;
    let mut out = Vec::new();
    let mut first = chain.marker();
    let mut index = 1;
    while first <= head {
        let closing = first + delta - 1;
        let last = closing.min(head);
        out.push(Sequence {
            index,
            number: first / delta + 1,
            first_block: first,
            last_block: last,
            length: last - first + 1,
            complete: closing <= head,
        });
        first += delta;
        index += 1;
    }
    out
}

fn check_valid(chain: &Chain) -> Result<(), SummarizeError> {
    match verify_chain(chain) {
        Verdict::Valid => Ok(()),
        Verdict::Broken { at, reason } => Err(SummarizeError::InvalidChain { at, reason }),
    }
}

/// Keep/drop decision for a temporary entry. Comparisons are strict: an
/// entry bounded by `τ8888` survives a summarization at `now = 8888` and is
/// dropped at the first one after it.
pub fn apply_expiry(entry: &Entry, now: Tick, head: BlockNumber) -> ExpiryVerdict {
    match entry.as_data().and_then(|d| d.expiry) {
        Some(Expiry::ByTime(t)) if t < now => ExpiryVerdict::Drop(DropReason::ExpiredByTime),
        Some(Expiry::ByBlock(b)) if b < head => ExpiryVerdict::Drop(DropReason::ExpiredByBlock),
        _ => ExpiryVerdict::Keep,
    }
}

/// Evaluates the minimum-length, minimum-summary and time-coverage guards
/// for a chain with its `merged` oldest sequences cut off, optionally with a
/// new summary block appended on top.
fn evaluate_guards(chain: &Chain, merged: &[Sequence], with_new_summary: bool) -> GuardVerdict {
    let config = chain.config();
    let Some(last) = merged.last() else {
        return GuardVerdict::Fail(GuardFailure::NothingToPrune);
    };
    let remaining: &[Block] = &chain.blocks()[(last.last_block + 1 - chain.marker()) as usize..];
    let extra = u64::from(with_new_summary);
    let length = remaining.len() as u64 + extra;
    if length < config.l_min {
        return GuardVerdict::Fail(GuardFailure::Length { remaining: length, l_min: config.l_min });
    }
    let summaries = remaining.iter().filter(|b| b.is_summary()).count() as u64 + extra;
    if summaries < config.min_summary_blocks {
        return GuardVerdict::Fail(GuardFailure::SummaryBlocks {
            remaining: summaries,
            min_summary_blocks: config.min_summary_blocks,
        });
    }
    let head_ts = chain.head().timestamp;
    let covered = remaining.first().map_or(0, |b| head_ts - b.timestamp);
    if covered < config.min_time_coverage {
        return GuardVerdict::Fail(GuardFailure::TimeCoverage { covered, min_time_coverage: config.min_time_coverage });
    }
    GuardVerdict::Pass
}

/// Would cutting off the oldest sequence of `chain`, as it stands, respect
/// the configured minimums?
pub fn prune_guards(chain: &Chain) -> GuardVerdict {
    let oldest: Vec<Sequence> = live_sequences(chain).into_iter().filter(|s| s.complete).take(1).collect();
    evaluate_guards(chain, &oldest, false)
}

/// Every data entry of blocks `first..=last` as summary entries, ordered by
/// origin. Deletion requests are left out.
pub fn sequence_entries(chain: &Chain, first: BlockNumber, last: BlockNumber) -> Vec<SummaryEntry> {
    let mut out: Vec<SummaryEntry> = (first..=last)
        .filter_map(|n| chain.block(n))
        .flat_map(|b| {
            let normal =
                b.entries().iter().enumerate().filter(|(_, e)| e.as_data().is_some()).map(|(i, e)| SummaryEntry {
                    origin_block_number: b.number,
                    origin_timestamp: b.timestamp,
                    origin_entry_number: i as u64,
                    entry: e.clone(),
                });
            normal.chain(b.summary_entries().iter().cloned()).collect::<Vec<_>>()
        })
        .collect();
    out.sort_by_key(SummaryEntry::origin);
    out
}

/// Picks the oldest sequences to merge so that the chain, with the new
/// summary appended, is back at or below `l_max`; collects what they carry.
///
/// Data entries are carried with their origin coordinates, including those
/// already sitting in the sequence's own summary block. Dropped are entries
/// marked for deletion, expired temporary entries and all deletion
/// requests. Expiry is judged against `now` and the current head number.
pub fn merge_oldest(chain: &Chain, now: Tick) -> Result<Merge, SummarizeError> {
    let config = chain.config();
    let len = chain.len();
    if len <= config.l_max {
        return Err(SummarizeError::NotOverLimit { len, l_max: config.l_max });
    }
    let complete: Vec<Sequence> = live_sequences(chain).into_iter().filter(|s| s.complete).collect();

    let mut take = 0usize;
    let mut merged_len = 0u64;
    let mut stopped_by = None;
    while len + 1 - merged_len > config.l_max {
        if take == complete.len() {
            stopped_by = Some(GuardFailure::NothingToPrune);
            break;
        }
        match evaluate_guards(chain, &complete[..=take], true) {
            GuardVerdict::Pass => {
                merged_len += complete[take].length;
                take += 1;
            }
            GuardVerdict::Fail(f) => {
                stopped_by = Some(f);
                break;
            }
        }
    }
    if take == 0 {
        return Err(SummarizeError::GuardViolation(stopped_by.unwrap_or(GuardFailure::NothingToPrune)));
    }

    let merged = complete[..take].to_vec();
    let head = chain.head().number;
    let mut carry = Vec::new();
    let mut dropped = Vec::new();
    let mut consider = |origin: EntryRef, entry: &Entry, make: &dyn Fn() -> SummaryEntry| {
        let reason = if entry.as_delete_request().is_some() {
            Some(DropReason::DeletionRequestNeverCopied)
        } else if chain.is_marked(origin) {
            Some(DropReason::DeletedOnRequest)
        } else if let ExpiryVerdict::Drop(r) = apply_expiry(entry, now, head) {
            Some(r)
        } else {
            None
        };
        match reason {
            Some(reason) => dropped.push(DroppedEntry { entry: origin, reason }),
            None => carry.push(make()),
        }
    };
    for seq in &merged {
        for n in seq.first_block..=seq.last_block {
            let block = chain.block(n).expect("merged sequence is live");
            for (i, entry) in block.entries().iter().enumerate() {
                let origin = EntryRef::new(n, i as u64);
                consider(origin, entry, &|| SummaryEntry {
                    origin_block_number: n,
                    origin_timestamp: block.timestamp,
                    origin_entry_number: i as u64,
                    entry: entry.clone(),
                });
            }
            for se in block.summary_entries() {
                consider(se.origin(), &se.entry, &|| se.clone());
            }
        }
    }
    carry.sort_by_key(SummaryEntry::origin);
    dropped.sort_by_key(|d| d.entry);
    Ok(Merge { carry, merged, dropped, stopped_by })
}

/// Merkle reference for the next summary block, taken on the chain before
/// any pruning by that summary.
pub fn redundancy_ref(chain: &Chain) -> Result<RedundancyRef, SummarizeError> {
    redundancy_ref_after(chain, chain.marker())
}

/// Merkle reference for the next summary block when that summary moves the
/// marker to `new_marker`.
///
/// The reference goes to the middle of the chain: the sequence holding the
/// block that will sit at half the chain length just before the following
/// summary. A sequence that no live summary references yet and that will
/// reach the older half of the chain before or just after the following
/// summary is referenced first, oldest first, so that no sequence enters the
/// older half unreferenced.
pub fn redundancy_ref_after(chain: &Chain, new_marker: BlockNumber) -> Result<RedundancyRef, SummarizeError> {
    let config = chain.config();
    let (d, l_max, l_min) = (config.delta_l, config.l_max, config.l_min);
    let complete: Vec<Sequence> = live_sequences(chain).into_iter().filter(|s| s.complete).collect();
    let Some(newest) = complete.last() else {
        return Err(SummarizeError::NotEnoughSequences);
    };
    let kept: Vec<&Sequence> = complete.iter().filter(|s| s.first_block >= new_marker).collect();
    let candidates: Vec<&Sequence> = if kept.is_empty() { vec![newest] } else { kept };

    let at = sequence_start(config, chain.next_number()) + d - 1;
    let len = at + 1 - new_marker;
    let middle_now = (at + d - 1).saturating_sub((len + d - 1).div_ceil(2));
    let before_next = len + d - 1;
    let mut cut = 0;
    if before_next > l_max {
        while before_next + 1 - cut * d > l_max
            && cut <= candidates.len() as u64
            && (at + d + 1).saturating_sub(new_marker + (cut + 1) * d) >= l_min
        {
            cut += 1;
        }
    }
    let middle_next = (at + d).saturating_sub((before_next + 1 - cut * d).div_ceil(2));
    let bound = middle_now.max(middle_next);

    let referenced: Vec<u64> = chain
        .blocks()
        .iter()
        .filter(|b| b.number >= new_marker)
        .filter_map(|b| b.redundancy().map(|r| r.sequence_index))
        .collect();
    let target =
        candidates.iter().find(|s| s.first_block <= bound && !referenced.contains(&s.number)).copied().unwrap_or_else(
            || {
                let index = (middle_now / d + 1).clamp(candidates[0].number, newest.number);
                complete.iter().find(|s| s.number == index).expect("index within live sequences")
            },
        );
    Ok(RedundancyRef {
        sequence_index: target.number,
        merkle_root: compute_merkle_root(&sequence_entries(chain, target.first_block, target.last_block)),
    })
}

/// Returns `summary` resealed with a redundancy reference computed on `chain`.
pub fn embed_redundancy(chain: &Chain, summary: Block) -> Result<Block, SummarizeError> {
    let r = redundancy_ref(chain)?;
    let BlockBody::Summary { entries, .. } = summary.body else {
        return Err(SummarizeError::NotAtSummaryPosition(summary.number));
    };
    Ok(Block::seal(
        summary.number,
        summary.timestamp,
        summary.previous_hash,
        BlockBody::Summary { entries, redundancy: Some(r) },
    ))
}

/// Builds the summary block for the next position from deterministic inputs
/// only: it copies the head's timestamp and carries `carry` unchanged.
pub fn build_summary_block(chain: &Chain, carry: Vec<SummaryEntry>) -> Result<Block, SummarizeError> {
    build_summary(chain, carry, chain.marker())
}

fn build_summary(chain: &Chain, carry: Vec<SummaryEntry>, new_marker: BlockNumber) -> Result<Block, SummarizeError> {
    let next = chain.next_number();
    if !needs_summary(chain.config(), next) {
        return Err(SummarizeError::NotAtSummaryPosition(next));
    }
    let head = chain.head();
    let redundancy =
        if chain.config().redundancy_enabled { redundancy_ref_after(chain, new_marker).ok() } else { None };
    Ok(Block::seal(next, head.timestamp, head.own_hash, BlockBody::Summary { entries: carry, redundancy }))
}

/// Moves the genesis marker to `new_marker`, discarding every block below.
pub fn shift_marker(chain: &Chain, new_marker: BlockNumber, ballot: &Ballot) -> Result<Chain, SummarizeError> {
    let mut next = chain.clone();
    shift_marker_in_place(&mut next, new_marker, ballot)?;
    Ok(next)
}

fn shift_marker_in_place(chain: &mut Chain, new_marker: BlockNumber, ballot: &Ballot) -> Result<(), SummarizeError> {
    if !ballot.approved || ballot.subject != (BallotSubject::MarkerShift { new_marker }) {
        return Err(SummarizeError::VoteRejected);
    }
    let aligned = sequence_start(chain.config(), new_marker) == new_marker;
    if !aligned || new_marker <= chain.marker() || new_marker > chain.head().number {
        return Err(SummarizeError::InvalidMarker(new_marker));
    }
    chain.cut_below(new_marker);
    Ok(())
}

/// Shrinks the chain when it is longer than `l_max`: appends a summary
/// block carrying the merged oldest sequences, then advances the marker to
/// the block after the last merged summary.
///
/// A chain at or below `l_max` is returned unchanged with an empty report.
pub fn prune(chain: &Chain, now: Tick) -> Result<(Chain, PruneReport), SummarizeError> {
    check_valid(chain)?;
    if chain.len() <= chain.config().l_max {
        return Ok((chain.clone(), PruneReport::unchanged(chain)));
    }
    let next_number = chain.next_number();
    if !needs_summary(chain.config(), next_number) {
        return Err(SummarizeError::NotAtSummaryPosition(next_number));
    }
    let merge = merge_oldest(chain, now)?;
    let ballot = Ballot::single_node(BallotSubject::MarkerShift { new_marker: merge.new_marker() });
    let mut next = chain.clone();
    let report = apply_merge(&mut next, merge, &ballot, |_| {})?;
    Ok((next, report))
}

impl Merge {
    /// The block after the last merged summary.
    pub fn new_marker(&self) -> BlockNumber {
        self.merged.last().expect("merge is non-empty").last_block + 1
    }
}

/// The marker a summary built now would move to, if the chain would be
/// pruned at all.
pub fn planned_marker(chain: &Chain) -> Option<BlockNumber> {
    if !needs_summary(chain.config(), chain.next_number()) || chain.len() <= chain.config().l_max {
        return None;
    }
    merge_oldest(chain, chain.head().timestamp).ok().map(|m| m.new_marker())
}

fn apply_merge(
    chain: &mut Chain,
    merge: Merge,
    ballot: &Ballot,
    tamper: impl FnOnce(&mut Vec<SummaryEntry>),
) -> Result<PruneReport, SummarizeError> {
    let new_marker = merge.new_marker();
    if !ballot.approved || ballot.subject != (BallotSubject::MarkerShift { new_marker }) {
        return Err(SummarizeError::VoteRejected);
    }
    let old_marker = chain.marker();
    let old_length = chain.len();
    let next_number = chain.next_number();
    let Merge { mut carry, merged, dropped, stopped_by } = merge;
    tamper(&mut carry);
    let summary = build_summary(chain, carry, new_marker)?;
    chain.push_summary(summary);
    shift_marker_in_place(chain, new_marker, ballot)?;
    Ok(PruneReport {
        merged_sequences: merged,
        dropped_entries: dropped,
        old_marker,
        new_marker,
        old_length,
        new_length: chain.len(),
        summary_block: Some(next_number),
        stopped_by,
    })
}

/// Builds the summary block for the next position, pruning first if the
/// chain is over `l_max`. A guard that forbids pruning yields a plain
/// summary and is reported in `guard_blocked`.
pub fn close_sequence(chain: &mut Chain) -> Result<SummaryOutcome, SummarizeError> {
    close_sequence_with(chain, &Ballot::single_node, |_| {})
}

/// [`close_sequence`] with the marker shift put to `approve`, and a hook
/// that may alter the carried entries before the block is sealed (fault
/// injection only). A rejected shift yields a plain summary.
pub fn close_sequence_with(
    chain: &mut Chain,
    approve: &dyn Fn(BallotSubject) -> Ballot,
    tamper: impl FnOnce(&mut Vec<SummaryEntry>),
) -> Result<SummaryOutcome, SummarizeError> {
    let next = chain.next_number();
    if !needs_summary(chain.config(), next) {
        return Err(SummarizeError::NotAtSummaryPosition(next));
    }
    let mut outcome =
        SummaryOutcome { block_number: next, hash: Digest::ZERO, report: None, guard_blocked: None, ballot: None };
    let mut tamper = Some(tamper);
    if chain.len() > chain.config().l_max {
        match merge_oldest(chain, chain.head().timestamp) {
            Ok(merge) => {
                let ballot = approve(BallotSubject::MarkerShift { new_marker: merge.new_marker() });
                if ballot.approved {
                    let hook = tamper.take().expect("tamper hook used once");
                    outcome.report = Some(apply_merge(chain, merge, &ballot, hook)?);
                }
                outcome.ballot = Some(ballot);
            }
            Err(SummarizeError::GuardViolation(g)) => outcome.guard_blocked = Some(g),
            Err(e) => return Err(e),
        }
    }
    if let Some(hook) = tamper {
        let mut carry = Vec::new();
        hook(&mut carry);
        chain.push_summary(build_summary_block(chain, carry)?);
    }
    outcome.hash = chain.block(next).expect("just built").own_hash;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::FIXTURE_GENESIS_PREVIOUS_HASH;
    use crate::crypto::KeyPair;
    use crate::registry::Registry;

    fn empty_chain(config: ChainConfig) -> (Chain, KeyPair) {
        let kp = KeyPair::derive("ALPHA", 0);
        let mut reg = Registry::new();
        reg.register_user("ALPHA", kp.public()).unwrap();
        (Chain::new(config, reg, FIXTURE_GENESIS_PREVIOUS_HASH, 0).unwrap(), kp)
    }

    /// Appends one block per tick, each with one entry, summarizing at the
    /// periodic positions.
    fn grow(chain: &mut Chain, kp: &KeyPair, blocks: u64) {
        for _ in 0..blocks {
            if needs_summary(chain.config(), chain.next_number()) {
                close_sequence(chain).unwrap();
            } else {
                let t = chain.head().timestamp + 1;
                let e = Entry::data(kp, "ALPHA", format!("t{t}").into_bytes(), None, vec![]);
                chain.append(chain.seal_normal(vec![e], t)).unwrap();
            }
        }
    }

    #[test]
    fn summary_positions() {
        let c3 = ChainConfig::new(3, 5);
        assert!(needs_summary(&c3, 2));
        assert!(!needs_summary(&c3, 3));
        assert!(needs_summary(&c3, 5));
        let c10 = ChainConfig::new(10, 30);
        assert!(needs_summary(&c10, 9));
        assert!(!needs_summary(&c10, 10));
    }

    #[test]
    fn genesis_only_is_one_partial_sequence() {
        let (c, _) = empty_chain(ChainConfig::new(3, 5));
        let seqs = sequence_boundaries(&c).unwrap();
        assert_eq!(seqs.len(), 1);
        assert!(!seqs[0].complete);
        assert_eq!((seqs[0].first_block, seqs[0].last_block), (0, 0));
    }

    #[test]
    fn expiry_rules() {
        let kp = KeyPair::derive("ALPHA", 0);
        let by_time = Entry::data(&kp, "ALPHA", b"x".to_vec(), Some(Expiry::ByTime(8888)), vec![]);
        let by_block = Entry::data(&kp, "ALPHA", b"x".to_vec(), Some(Expiry::ByBlock(4711)), vec![]);
        let plain = Entry::data(&kp, "ALPHA", b"x".to_vec(), None, vec![]);
        assert_eq!(apply_expiry(&by_time, 9000, 0), ExpiryVerdict::Drop(DropReason::ExpiredByTime));
        assert_eq!(apply_expiry(&by_time, 8888, 0), ExpiryVerdict::Keep);
        assert_eq!(apply_expiry(&by_block, 0, 4000), ExpiryVerdict::Keep);
        assert_eq!(apply_expiry(&by_block, 0, 4711), ExpiryVerdict::Keep);
        assert_eq!(apply_expiry(&by_block, 0, 4712), ExpiryVerdict::Drop(DropReason::ExpiredByBlock));
        assert_eq!(apply_expiry(&plain, u64::MAX, u64::MAX), ExpiryVerdict::Keep);
    }

    #[test]
    fn prune_at_or_below_limit_is_noop() {
        let (mut c, kp) = empty_chain(ChainConfig::new(3, 5));
        grow(&mut c, &kp, 4);
        assert_eq!(c.len(), 5);
        let (after, report) = prune(&c, 4).unwrap();
        assert_eq!(after, c);
        assert!(report.is_noop());
    }

    #[test]
    fn prune_between_positions_is_refused() {
        let (mut c, kp) = empty_chain(ChainConfig::new(3, 5));
        grow(&mut c, &kp, 6);
        assert_eq!(c.next_number(), 7);
        assert!(matches!(prune(&c, 10), Err(SummarizeError::NotAtSummaryPosition(7))));
    }

    #[test]
    fn guard_length_boundary() {
        let mut config = ChainConfig::new(3, 10);
        config.l_min = 4;
        let (mut c, kp) = empty_chain(config);
        // l_min + delta_l - 1 = 6 blocks
        grow(&mut c, &kp, 5);
        assert_eq!(c.len(), 6);
        assert_eq!(prune_guards(&c), GuardVerdict::Fail(GuardFailure::Length { remaining: 3, l_min: 4 }));
        grow(&mut c, &kp, 1);
        assert_eq!(prune_guards(&c), GuardVerdict::Pass);
    }

    #[test]
    fn guard_time_coverage() {
        let mut config = ChainConfig::new(3, 6);
        let (mut c, kp) = empty_chain(config.clone());
        grow(&mut c, &kp, 9);
        let span = c.head().timestamp - c.blocks()[0].timestamp;
        config.min_time_coverage = span;
        let c = Chain::from_parts(config, c.registry().clone(), c.blocks().to_vec(), Default::default()).unwrap();
        assert!(matches!(prune_guards(&c), GuardVerdict::Fail(GuardFailure::TimeCoverage { .. })));
    }

    #[test]
    fn guard_nothing_to_prune() {
        let (c, _) = empty_chain(ChainConfig::new(3, 5));
        assert_eq!(prune_guards(&c), GuardVerdict::Fail(GuardFailure::NothingToPrune));
    }

    #[test]
    fn shift_marker_rules() {
        let (mut c, kp) = empty_chain(ChainConfig::new(3, 100));
        grow(&mut c, &kp, 8);
        let ok = Ballot::single_node(BallotSubject::MarkerShift { new_marker: 6 });
        let shifted = shift_marker(&c, 6, &ok).unwrap();
        assert_eq!(shifted.marker(), 6);
        assert_eq!(shifted.head(), c.head());
        assert!(verify_chain(&shifted).is_valid());

        let mut rejected = ok.clone();
        rejected.approved = false;
        assert_eq!(shift_marker(&c, 6, &rejected), Err(SummarizeError::VoteRejected));
        let wrong_subject = Ballot::single_node(BallotSubject::MarkerShift { new_marker: 3 });
        assert_eq!(shift_marker(&c, 6, &wrong_subject), Err(SummarizeError::VoteRejected));
        let odd = Ballot::single_node(BallotSubject::MarkerShift { new_marker: 4 });
        assert_eq!(shift_marker(&c, 4, &odd), Err(SummarizeError::InvalidMarker(4)));
    }

    #[test]
    fn redundancy_needs_a_complete_sequence() {
        let (mut c, kp) = empty_chain(ChainConfig::new(3, 100).with_redundancy(true));
        grow(&mut c, &kp, 1);
        assert_eq!(redundancy_ref(&c), Err(SummarizeError::NotEnoughSequences));
        grow(&mut c, &kp, 11);
        // four complete sequences: 0-2, 3-5, 6-8, 9-11, each referenced by
        // the following summary while the chain is short
        let refs: Vec<u64> = c.blocks().iter().filter_map(|b| b.redundancy()).map(|r| r.sequence_index).collect();
        assert_eq!(refs, vec![1, 2, 3]);
        assert_eq!(redundancy_ref(&c).unwrap().sequence_index, 3);
    }

    #[test]
    fn summary_copies_head_timestamp() {
        let (mut c, kp) = empty_chain(ChainConfig::new(3, 5));
        grow(&mut c, &kp, 1);
        let s = build_summary_block(&c, vec![]).unwrap();
        assert_eq!(s.timestamp, c.head().timestamp);
        assert_eq!(s.number, 2);
        assert!(s.summary_entries().is_empty());
    }
}
