//! Canonical byte encoding.
//!
//! Every record is laid out as
//!
//! ```text
//! [tag: u8][field count: u16 BE]
//!   repeated: [name length: u16 BE][name bytes][value length: u32 BE][value bytes]
//! ```
//!
//! with fields in a fixed schema order. Value encodings:
//!
//! * integers: 8 bytes, big-endian
//! * strings: UTF-8 bytes
//! * digests, keys, signatures, nonces: raw bytes
//! * optional values: `0x00` when absent, `0x01` followed by the value when present
//! * lists: `u32 BE` item count, then each item as `[u32 BE length][item bytes]`
//! * nested records: the nested record's own canonical bytes
//!
//! The layout is frozen: block hashes and signatures are computed over it, so
//! any change forks every existing chain.

/// Record tags.
pub mod tag {
    pub const BLOCK_NORMAL: u8 = 0x10;
    pub const BLOCK_SUMMARY: u8 = 0x11;
    pub const BLOCK_EMPTY: u8 = 0x12;
    pub const ENTRY_DATA: u8 = 0x20;
    pub const ENTRY_DELETE_REQUEST: u8 = 0x21;
    pub const SUMMARY_ENTRY: u8 = 0x30;
    pub const ENTRY_REF: u8 = 0x40;
    pub const EXPIRY_BY_TIME: u8 = 0x41;
    pub const EXPIRY_BY_BLOCK: u8 = 0x42;
    pub const REDUNDANCY_REF: u8 = 0x50;
    pub const COSIGNATURE: u8 = 0x60;
    pub const COSIGN_MESSAGE: u8 = 0x61;
}

/// Builder for one canonical record.
#[derive(Debug)]
pub struct Record {
    tag: u8,
    fields: Vec<(&'static str, Vec<u8>)>,
}

impl Record {
    pub fn new(tag: u8) -> Self {
        Record { tag, fields: Vec::new() }
    }

    pub fn raw(mut self, name: &'static str, value: impl Into<Vec<u8>>) -> Self {
        self.fields.push((name, value.into()));
        self
    }

    pub fn u64(self, name: &'static str, value: u64) -> Self {
        self.raw(name, value.to_be_bytes().to_vec())
    }

    pub fn str(self, name: &'static str, value: &str) -> Self {
        self.raw(name, value.as_bytes().to_vec())
    }

    pub fn opt(self, name: &'static str, value: Option<Vec<u8>>) -> Self {
        let bytes = match value {
            None => vec![0u8],
            Some(inner) => {
                let mut out = Vec::with_capacity(inner.len() + 1);
                out.push(1u8);
                out.extend_from_slice(&inner);
                out
            }
        };
        self.raw(name, bytes)
    }

    pub fn list<I>(self, name: &'static str, items: I) -> Self
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        self.raw(name, encode_list(items))
    }

    pub fn finish(self) -> Vec<u8> {
        let count = u16::try_from(self.fields.len()).expect("record field count exceeds u16");
        let mut out = Vec::new();
        out.push(self.tag);
        out.extend_from_slice(&count.to_be_bytes());
        for (name, value) in self.fields {
            let name_len = u16::try_from(name.len()).expect("field name exceeds u16");
            let value_len = u32::try_from(value.len()).expect("field value exceeds u32");
            out.extend_from_slice(&name_len.to_be_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&value_len.to_be_bytes());
            out.extend_from_slice(&value);
        }
        out
    }
}

pub fn encode_list<I>(items: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<u8>>,
{
    let items: Vec<Vec<u8>> = items.into_iter().collect();
    let count = u32::try_from(items.len()).expect("list length exceeds u32");
    let mut out = count.to_be_bytes().to_vec();
    for item in items {
        let len = u32::try_from(item.len()).expect("list item exceeds u32");
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&item);
    }
    out
}

/// Types with a canonical byte form.
pub trait Canonical {
    fn canonical_bytes(&self) -> Vec<u8>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_layout_is_bit_exact() {
        let bytes = Record::new(0xAB).u64("n", 258).str("s", "hi").finish();
        let expected: Vec<u8> = vec![
            0xAB, 0x00, 0x02, // tag, field count
            0x00, 0x01, b'n', 0x00, 0x00, 0x00, 0x08, 0, 0, 0, 0, 0, 0, 0x01, 0x02, // n
            0x00, 0x01, b's', 0x00, 0x00, 0x00, 0x02, b'h', b'i', // s
        ];
        assert_eq!(bytes, expected);
    }

    #[test]
    fn optional_and_list_encoding() {
        let absent = Record::new(1).opt("o", None).finish();
        assert_eq!(&absent[3..], &[0, 1, b'o', 0, 0, 0, 1, 0][..]);
        let present = Record::new(1).opt("o", Some(vec![9])).finish();
        assert_eq!(&present[3..], &[0, 1, b'o', 0, 0, 0, 2, 1, 9][..]);
        assert_eq!(encode_list(vec![vec![7u8], vec![]]), vec![0, 0, 0, 2, 0, 0, 0, 1, 7, 0, 0, 0, 0]);
    }
}
