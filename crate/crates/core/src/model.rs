//! Entries and blocks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{tag, Canonical, Record};
use crate::crypto::{Digest, KeyPair, PublicKey, Signature};

pub type BlockNumber = u64;

/// Logical time. Supplied by the caller; never read from a wall clock.
pub type Tick = u64;

/// Address of an entry: the block it was first stored in and its 0-based
/// position in that block's entry list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryRef {
    pub block_number: BlockNumber,
    pub entry_number: u64,
}

impl EntryRef {
    pub fn new(block_number: BlockNumber, entry_number: u64) -> Self {
        EntryRef { block_number, entry_number }
    }
}

impl Canonical for EntryRef {
    fn canonical_bytes(&self) -> Vec<u8> {
        Record::new(tag::ENTRY_REF)
            .u64("block_number", self.block_number)
            .u64("entry_number", self.entry_number)
            .finish()
    }
}

impl fmt::Display for EntryRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.block_number, self.entry_number)
    }
}

impl FromStr for EntryRef {
    type Err = String;

    /// Parses `"<block>.<entry>"` or `"<block>,<entry>"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (b, e) = s.split_once(['.', ',']).ok_or_else(|| format!("expected <block>.<entry>, got {s:?}"))?;
        let block = b.trim().parse().map_err(|_| format!("bad block number in {s:?}"))?;
        let entry = e.trim().parse().map_err(|_| format!("bad entry number in {s:?}"))?;
        Ok(EntryRef::new(block, entry))
    }
}

/// Bound after which a temporary entry is no longer carried into summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expiry {
    ByTime(Tick),
    ByBlock(BlockNumber),
}

impl Canonical for Expiry {
    fn canonical_bytes(&self) -> Vec<u8> {
        match *self {
            Expiry::ByTime(t) => Record::new(tag::EXPIRY_BY_TIME).u64("tick", t).finish(),
            Expiry::ByBlock(b) => Record::new(tag::EXPIRY_BY_BLOCK).u64("block_number", b).finish(),
        }
    }
}

impl fmt::Display for Expiry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expiry::ByTime(t) => write!(f, "τ{t}"),
            Expiry::ByBlock(b) => write!(f, "α{b}"),
        }
    }
}

/// Consent of a dependent party to the deletion of an entry it builds on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cosignature {
    pub user: String,
    pub signature: Signature,
}

impl Cosignature {
    pub fn message(target: EntryRef, user: &str) -> Vec<u8> {
        Record::new(tag::COSIGN_MESSAGE).raw("target", target.canonical_bytes()).str("user", user).finish()
    }

    pub fn sign(keys: &KeyPair, user: &str, target: EntryRef) -> Self {
        Cosignature { user: user.to_string(), signature: keys.sign(&Self::message(target, user)) }
    }

    pub fn verify(&self, key: &PublicKey, target: EntryRef) -> bool {
        key.verify(&Self::message(target, &self.user), &self.signature)
    }
}

impl Canonical for Cosignature {
    fn canonical_bytes(&self) -> Vec<u8> {
        Record::new(tag::COSIGNATURE).str("user", &self.user).raw("signature", self.signature.0.to_vec()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataEntry {
    pub user: String,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
    #[serde(default)]
    pub expiry: Option<Expiry>,
    #[serde(default)]
    pub depends_on: Vec<EntryRef>,
    pub signature: Signature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeleteRequest {
    pub user: String,
    pub target: EntryRef,
    /// Consent of owners of entries depending on `target`. Not covered by
    /// `signature`; each cosignature authenticates itself.
    #[serde(default)]
    pub cosignatures: Vec<Cosignature>,
    pub signature: Signature,
}

/// A signed entry inside a normal block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entry {
    Data(DataEntry),
    DeleteRequest(DeleteRequest),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Data,
    DeleteRequest,
}

impl Entry {
    /// Builds and signs a data entry.
    pub fn data(
        keys: &KeyPair,
        user: &str,
        payload: impl Into<Vec<u8>>,
        expiry: Option<Expiry>,
        depends_on: Vec<EntryRef>,
    ) -> Self {
        let mut data = DataEntry {
            user: user.to_string(),
            payload: payload.into(),
            expiry,
            depends_on,
            signature: Signature::EMPTY,
        };
        let entry = Entry::Data(data.clone());
        data.signature = keys.sign(&entry.signing_bytes());
        Entry::Data(data)
    }

    /// Builds and signs a deletion request for `target`.
    pub fn delete_request(keys: &KeyPair, user: &str, target: EntryRef, cosignatures: Vec<Cosignature>) -> Self {
        let mut req = DeleteRequest { user: user.to_string(), target, cosignatures, signature: Signature::EMPTY };
        let entry = Entry::DeleteRequest(req.clone());
        req.signature = keys.sign(&entry.signing_bytes());
        Entry::DeleteRequest(req)
    }

    pub fn kind(&self) -> EntryKind {
        match self {
            Entry::Data(_) => EntryKind::Data,
            Entry::DeleteRequest(_) => EntryKind::DeleteRequest,
        }
    }

    pub fn user(&self) -> &str {
        match self {
            Entry::Data(d) => &d.user,
            Entry::DeleteRequest(r) => &r.user,
        }
    }

    pub fn signature(&self) -> &Signature {
        match self {
            Entry::Data(d) => &d.signature,
            Entry::DeleteRequest(r) => &r.signature,
        }
    }

    pub fn as_data(&self) -> Option<&DataEntry> {
        match self {
            Entry::Data(d) => Some(d),
            Entry::DeleteRequest(_) => None,
        }
    }

    pub fn as_delete_request(&self) -> Option<&DeleteRequest> {
        match self {
            Entry::DeleteRequest(r) => Some(r),
            Entry::Data(_) => None,
        }
    }

    pub fn depends_on(&self) -> &[EntryRef] {
        match self {
            Entry::Data(d) => &d.depends_on,
            Entry::DeleteRequest(_) => &[],
        }
    }

    /// The bytes covered by the entry signature: every field except the
    /// signature itself (and, for deletion requests, the cosignatures).
    pub fn signing_bytes(&self) -> Vec<u8> {
        self.record(false)
    }

    pub fn verify_signature(&self, key: &PublicKey) -> bool {
        key.verify(&self.signing_bytes(), self.signature())
    }

    fn record(&self, full: bool) -> Vec<u8> {
        match self {
            Entry::Data(d) => {
                let r = Record::new(tag::ENTRY_DATA)
                    .str("user", &d.user)
                    .raw("payload", d.payload.clone())
                    .opt("expiry", d.expiry.map(|e| e.canonical_bytes()))
                    .list("depends_on", d.depends_on.iter().map(Canonical::canonical_bytes));
                if full {
                    r.raw("signature", d.signature.0.to_vec()).finish()
                } else {
                    r.finish()
                }
            }
            Entry::DeleteRequest(q) => {
                let r = Record::new(tag::ENTRY_DELETE_REQUEST)
                    .str("user", &q.user)
                    .raw("target", q.target.canonical_bytes());
                if full {
                    r.list("cosignatures", q.cosignatures.iter().map(Canonical::canonical_bytes))
                        .raw("signature", q.signature.0.to_vec())
                        .finish()
                } else {
                    r.finish()
                }
            }
        }
    }
}

impl Canonical for Entry {
    fn canonical_bytes(&self) -> Vec<u8> {
        self.record(true)
    }
}

/// A data entry copied into a summary block, keeping the coordinates it was
/// first stored under.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub origin_block_number: BlockNumber,
    pub origin_timestamp: Tick,
    pub origin_entry_number: u64,
    pub entry: Entry,
}

impl SummaryEntry {
    pub fn origin(&self) -> EntryRef {
        EntryRef::new(self.origin_block_number, self.origin_entry_number)
    }
}

impl Canonical for SummaryEntry {
    fn canonical_bytes(&self) -> Vec<u8> {
        Record::new(tag::SUMMARY_ENTRY)
            .u64("origin_block_number", self.origin_block_number)
            .u64("origin_timestamp", self.origin_timestamp)
            .u64("origin_entry_number", self.origin_entry_number)
            .raw("entry", self.entry.canonical_bytes())
            .finish()
    }
}

/// Merkle root of an older sequence stored in a summary block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyRef {
    /// Absolute 1-based sequence number: the sequence starting at block
    /// `(sequence_index - 1) * delta_l`.
    pub sequence_index: u64,
    pub merkle_root: Digest,
}

impl Canonical for RedundancyRef {
    fn canonical_bytes(&self) -> Vec<u8> {
        Record::new(tag::REDUNDANCY_REF)
            .u64("sequence_index", self.sequence_index)
            .raw("merkle_root", self.merkle_root.0.to_vec())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Normal,
    Summary,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockBody {
    Normal {
        nonce: [u8; 8],
        entries: Vec<Entry>,
    },
    Summary {
        entries: Vec<SummaryEntry>,
        redundancy: Option<RedundancyRef>,
    },
    /// Heartbeat block emitted while idle.
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub number: BlockNumber,
    pub timestamp: Tick,
    pub previous_hash: Digest,
    pub own_hash: Digest,
    pub body: BlockBody,
}

impl Block {
    /// Builds a block and computes its own hash.
    pub fn seal(number: BlockNumber, timestamp: Tick, previous_hash: Digest, body: BlockBody) -> Self {
        let mut block = Block { number, timestamp, previous_hash, own_hash: Digest::ZERO, body };
        block.own_hash = block.compute_hash();
        block
    }

    pub fn normal(number: BlockNumber, timestamp: Tick, previous_hash: Digest, entries: Vec<Entry>) -> Self {
        Self::seal(number, timestamp, previous_hash, BlockBody::Normal { nonce: [0u8; 8], entries })
    }

    pub fn kind(&self) -> BlockKind {
        match self.body {
            BlockBody::Normal { .. } => BlockKind::Normal,
            BlockBody::Summary { .. } => BlockKind::Summary,
            BlockBody::Empty => BlockKind::Empty,
        }
    }

    pub fn is_summary(&self) -> bool {
        self.kind() == BlockKind::Summary
    }

    /// Entries of a normal block; empty for other kinds.
    pub fn entries(&self) -> &[Entry] {
        match &self.body {
            BlockBody::Normal { entries, .. } => entries,
            _ => &[],
        }
    }

    /// Entries of a summary block; empty for other kinds.
    pub fn summary_entries(&self) -> &[SummaryEntry] {
        match &self.body {
            BlockBody::Summary { entries, .. } => entries,
            _ => &[],
        }
    }

    pub fn redundancy(&self) -> Option<&RedundancyRef> {
        match &self.body {
            BlockBody::Summary { redundancy, .. } => redundancy.as_ref(),
            _ => None,
        }
    }

    /// SHA-256 over the canonical bytes without `own_hash`.
    pub fn compute_hash(&self) -> Digest {
        Digest::of(&self.record(false))
    }

    pub fn hash_is_valid(&self) -> bool {
        self.compute_hash() == self.own_hash
    }

    fn record(&self, with_own_hash: bool) -> Vec<u8> {
        let record = match &self.body {
            BlockBody::Normal { nonce, entries } => Record::new(tag::BLOCK_NORMAL)
                .u64("block_number", self.number)
                .u64("timestamp", self.timestamp)
                .raw("previous_hash", self.previous_hash.0.to_vec())
                .raw("nonce", nonce.to_vec())
                .list("entries", entries.iter().map(Canonical::canonical_bytes)),
            BlockBody::Summary { entries, redundancy } => Record::new(tag::BLOCK_SUMMARY)
                .u64("block_number", self.number)
                .u64("timestamp", self.timestamp)
                .raw("previous_hash", self.previous_hash.0.to_vec())
                .list("entries", entries.iter().map(Canonical::canonical_bytes))
                .opt("redundancy_ref", redundancy.map(|r| r.canonical_bytes())),
            BlockBody::Empty => Record::new(tag::BLOCK_EMPTY)
                .u64("block_number", self.number)
                .u64("timestamp", self.timestamp)
                .raw("previous_hash", self.previous_hash.0.to_vec()),
        };
        if with_own_hash {
            record.raw("own_hash", self.own_hash.0.to_vec()).finish()
        } else {
            record.finish()
        }
    }
}

impl Canonical for Block {
    fn canonical_bytes(&self) -> Vec<u8> {
        self.record(true)
    }
}

/// SHA-256 of a block's canonical bytes excluding its own hash field.
pub fn hash_block(block: &Block) -> Digest {
    block.compute_hash()
}

// JSON form: one flat object per block, fields in canonical order.

#[derive(Serialize)]
struct BlockOut<'a> {
    kind: BlockKind,
    block_number: BlockNumber,
    timestamp: Tick,
    previous_hash: Digest,
    own_hash: Digest,
    #[serde(skip_serializing_if = "Option::is_none")]
    nonce: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entries: Option<EntriesOut<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    redundancy_ref: Option<&'a RedundancyRef>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum EntriesOut<'a> {
    Normal(&'a [Entry]),
    Summary(&'a [SummaryEntry]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockIn {
    kind: BlockKind,
    block_number: BlockNumber,
    timestamp: Tick,
    previous_hash: Digest,
    own_hash: Digest,
    #[serde(default)]
    nonce: Option<String>,
    #[serde(default)]
    entries: Option<serde_json::Value>,
    #[serde(default)]
    redundancy_ref: Option<RedundancyRef>,
}

impl Serialize for Block {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (nonce, entries, redundancy_ref) = match &self.body {
            BlockBody::Normal { nonce, entries } => (Some(hex::encode(nonce)), Some(EntriesOut::Normal(entries)), None),
            BlockBody::Summary { entries, redundancy } => {
                (None, Some(EntriesOut::Summary(entries)), redundancy.as_ref())
            }
            BlockBody::Empty => (None, None, None),
        };
        BlockOut {
            kind: self.kind(),
            block_number: self.number,
            timestamp: self.timestamp,
            previous_hash: self.previous_hash,
            own_hash: self.own_hash,
            nonce,
            entries,
            redundancy_ref,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = BlockIn::deserialize(d)?;
        let entries = raw.entries.unwrap_or(serde_json::Value::Array(Vec::new()));
        let body = match raw.kind {
            BlockKind::Normal => {
                let nonce_hex = raw.nonce.ok_or_else(|| D::Error::missing_field("nonce"))?;
                let nonce: [u8; 8] = hex::decode(&nonce_hex)
                    .map_err(D::Error::custom)?
                    .try_into()
                    .map_err(|_| D::Error::custom("nonce must be 8 bytes"))?;
                let entries: Vec<Entry> = serde_json::from_value(entries).map_err(D::Error::custom)?;
                BlockBody::Normal { nonce, entries }
            }
            BlockKind::Summary => {
                let entries: Vec<SummaryEntry> = serde_json::from_value(entries).map_err(D::Error::custom)?;
                BlockBody::Summary { entries, redundancy: raw.redundancy_ref }
            }
            BlockKind::Empty => BlockBody::Empty,
        };
        Ok(Block {
            number: raw.block_number,
            timestamp: raw.timestamp,
            previous_hash: raw.previous_hash,
            own_hash: raw.own_hash,
            body,
        })
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}
