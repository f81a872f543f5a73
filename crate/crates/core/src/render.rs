//! Line-per-block console rendering.
//!
//! ```text
//! 1; 1; deadb; 4c0e1; D:{"user":"alpha"} K:ALPHA S:5b1f0
//! S2; 1; 4c0e1; 9a7d2;
//! ```
//!
//! Hashes and signatures are shortened to five lowercase hex digits. Summary
//! lines start with `S`, empty heartbeat blocks with `E`.

use std::fmt::Write;

use crate::chain::Chain;
use crate::model::{Block, BlockKind, Entry, EntryRef, SummaryEntry};

const BLUE: &str = "\x1b[34m";
const RESET: &str = "\x1b[0m";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RenderOptions {
    /// Wrap summary lines in ANSI blue.
    pub color: bool,
}

pub fn render_entry(entry: &Entry) -> String {
    match entry {
        Entry::Data(d) => {
            let mut s = format!("D:{} K:{} S:{}", String::from_utf8_lossy(&d.payload), d.user, d.signature.short());
            if let Some(expiry) = d.expiry {
                let _ = write!(s, " T:{expiry}");
            }
            if !d.depends_on.is_empty() {
                let refs: Vec<String> = d.depends_on.iter().map(EntryRef::to_string).collect();
                let _ = write!(s, " R:{}", refs.join(","));
            }
            s
        }
        Entry::DeleteRequest(r) => {
            let mut s = format!("DEL:{} K:{} S:{}", r.target, r.user, r.signature.short());
            for c in &r.cosignatures {
                let _ = write!(s, " C:{}", c.user);
            }
            s
        }
    }
}

pub fn render_summary_entry(se: &SummaryEntry) -> String {
    format!("{}@{} {}", se.origin(), se.origin_timestamp, render_entry(&se.entry))
}

pub fn render_block(block: &Block, options: RenderOptions) -> String {
    let prefix = match block.kind() {
        BlockKind::Normal => "",
        BlockKind::Summary => "S",
        BlockKind::Empty => "E",
    };
    let mut line = format!(
        "{prefix}{}; {}; {}; {};",
        block.number,
        block.timestamp,
        block.previous_hash.short(),
        block.own_hash.short()
    );
    let entries: Vec<String> = match block.kind() {
        BlockKind::Summary => block.summary_entries().iter().map(render_summary_entry).collect(),
        _ => block.entries().iter().map(render_entry).collect(),
    };
    if !entries.is_empty() {
        line.push(' ');
        line.push_str(&entries.join("; "));
    }
    if let Some(r) = block.redundancy() {
        let _ = write!(line, " M:{}#{}", r.sequence_index, r.merkle_root.short());
    }
    if options.color && block.is_summary() {
        format!("{BLUE}{line}{RESET}")
    } else {
        line
    }
}

/// One line per live block, each terminated by `\n`.
pub fn render_chain(chain: &Chain, options: RenderOptions) -> String {
    let mut out = String::new();
    for block in chain.blocks() {
        out.push_str(&render_block(block, options));
        out.push('\n');
    }
    out
}

/// The uncolored rendering used for golden files.
pub fn golden_render(chain: &Chain) -> String {
    render_chain(chain, RenderOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::FIXTURE_GENESIS_PREVIOUS_HASH;
    use crate::config::ChainConfig;
    use crate::crypto::KeyPair;
    use crate::model::Expiry;
    use crate::registry::Registry;

    fn genesis() -> Chain {
        Chain::new(ChainConfig::new(3, 5), Registry::new(), FIXTURE_GENESIS_PREVIOUS_HASH, 0).unwrap()
    }

    #[test]
    fn genesis_only() {
        let c = genesis();
        let out = golden_render(&c);
        assert_eq!(out.lines().count(), 1);
        assert!(out.starts_with("0; 0; deadb; "));
        assert!(out.ends_with(";\n"));
    }

    #[test]
    fn entry_fields() {
        let kp = KeyPair::derive("BRAVO", 0);
        let e = Entry::data(&kp, "BRAVO", b"login".to_vec(), Some(Expiry::ByTime(8888)), vec![EntryRef::new(3, 1)]);
        let sig = e.signature().short();
        assert_eq!(render_entry(&e), format!("D:login K:BRAVO S:{sig} T:τ8888 R:3.1"));
        let r = Entry::delete_request(&kp, "BRAVO", EntryRef::new(3, 1), vec![]);
        assert_eq!(render_entry(&r), format!("DEL:3.1 K:BRAVO S:{}", r.signature().short()));
    }

    #[test]
    fn color_only_on_summaries() {
        let mut c = genesis();
        c.append(c.seal_normal(vec![], 1)).unwrap();
        crate::summarize::close_sequence(&mut c).unwrap();
        let colored = render_chain(&c, RenderOptions { color: true });
        let lines: Vec<&str> = colored.lines().collect();
        assert!(!lines[1].contains(BLUE));
        assert!(lines[2].starts_with(&format!("{BLUE}S2; ")));
        assert_eq!(golden_render(&c).lines().nth(2).unwrap().chars().next(), Some('S'));
    }
}
