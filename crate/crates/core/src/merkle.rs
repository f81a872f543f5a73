//! Binary Merkle tree over summary entries.
//!
//! Leaves are `H(0x00 || canonical entry bytes)`, inner nodes
//! `H(0x01 || left || right)`. A level with an odd number of nodes pairs its
//! last node with itself. The root of an empty list is `H("")`.

use crate::codec::Canonical;
use crate::crypto::Digest;
use crate::model::SummaryEntry;

const LEAF: u8 = 0x00;
const NODE: u8 = 0x01;

pub fn leaf_hash(bytes: &[u8]) -> Digest {
    Digest::of_parts(&[&[LEAF], bytes])
}

pub fn node_hash(left: &Digest, right: &Digest) -> Digest {
    Digest::of_parts(&[&[NODE], left.as_bytes(), right.as_bytes()])
}

pub fn compute_merkle_root(entries: &[SummaryEntry]) -> Digest {
    let leaves: Vec<Digest> = entries.iter().map(|e| leaf_hash(&e.canonical_bytes())).collect();
    root_of_leaves(leaves)
}

pub fn root_of_leaves(mut level: Vec<Digest>) -> Digest {
    if level.is_empty() {
        return Digest::of(b"");
    }
    // A lone leaf is still paired with itself once, so the root is always
    // an inner node.
    loop {
        level = level.chunks(2).map(|pair| node_hash(&pair[0], pair.get(1).unwrap_or(&pair[0]))).collect();
        if level.len() == 1 {
            return level[0];
        }
    }
}
