//! Light clients choosing which chain to trust.
//!
//! A client never prefers a chain for being longer. It asks its trusted
//! anchors for their chains, takes the newest block a strict majority of them
//! hold as the status quo, and accepts a candidate only if the candidate is
//! valid and contains that block.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::chain::Chain;
use crate::crypto::Digest;
use crate::model::BlockNumber;
use crate::verify::{verify_chain, BrokenReason, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "rejection", rename_all = "kebab-case")]
pub enum ClientRejection {
    NoStatusQuo,
    Broken { at: BlockNumber, reason: BrokenReason },
    NotTraceable { number: BlockNumber, hash: Digest },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum ClientVerdict {
    Accept,
    Reject(ClientRejection),
}

/// The newest `(number, hash)` held by more than half of `trusted`.
pub fn status_quo(trusted: &[&Chain]) -> Option<(BlockNumber, Digest)> {
    let mut counts: BTreeMap<(BlockNumber, Digest), usize> = BTreeMap::new();
    for chain in trusted {
        for block in chain.blocks() {
            *counts.entry((block.number, block.own_hash)).or_default() += 1;
        }
    }
    counts.into_iter().filter(|(_, c)| c * 2 > trusted.len()).map(|(k, _)| k).max_by_key(|(number, _)| *number)
}

pub fn client_sync(trusted: &[&Chain], candidate: &Chain) -> ClientVerdict {
    let Some((number, hash)) = status_quo(trusted) else {
        return ClientVerdict::Reject(ClientRejection::NoStatusQuo);
    };
    if let Verdict::Broken { at, reason } = verify_chain(candidate) {
        return ClientVerdict::Reject(ClientRejection::Broken { at, reason });
    }
    match candidate.block(number) {
        Some(b) if b.own_hash == hash => ClientVerdict::Accept,
        _ => ClientVerdict::Reject(ClientRejection::NotTraceable { number, hash }),
    }
}
