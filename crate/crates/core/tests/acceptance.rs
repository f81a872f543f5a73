//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits non-zero if any fails.
//!
//! Set `PRUNECHAIN_BLESS=1` to rewrite the golden files.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use prunechain::codec::Canonical;
use prunechain::deletion::{make_delete_request, DeletionVerdict, NoEffectReason};
use prunechain::model::{Block, BlockBody, EntryRef, Expiry, SummaryEntry};
use prunechain::node::{walkthrough, TickOutcome};
use prunechain::render::golden_render;
use prunechain::sim::scenario::{CorruptParams, DeleteParams, SubmitParams};
use prunechain::sim::{run_simulation, Action, FaultMode, ScenarioEvent, SimConfig, SyncStatus, TraceEvent};
use prunechain::summarize::DropReason;
use prunechain::verify::verify_chain;
use prunechain::{Chain, ChainConfig, Digest, Entry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest as _, Sha256};

use common::{check_shrink, live_payloads, random_config, Driver, Shadow, Step};

struct Outcome {
    detail: String,
    failure: Option<String>,
    limit: Option<Duration>,
}

impl Outcome {
    fn pass(detail: impl Into<String>) -> Self {
        Outcome { detail: detail.into(), failure: None, limit: None }
    }

    fn check(detail: impl Into<String>, failure: Option<String>) -> Self {
        Outcome { detail: detail.into(), failure, limit: None }
    }

    fn within(mut self, limit: Duration) -> Self {
        self.limit = Some(limit);
        self
    }
}

type Check = (&'static str, fn() -> Outcome);

fn main() {
    let checks: Vec<Check> = vec![
        ("walkthrough golden files", walkthrough_goldens),
        ("shrink arithmetic", shrink_arithmetic),
        ("content preservation", content_preservation),
        ("local summary determinism", summary_determinism),
        ("post-prune validity", post_prune_validity),
        ("authorization matrix", authorization_matrix),
        ("temporary entry expiry", temporary_expiry),
        ("confirmation depth", confirmation_depth),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let mut out = check();
        let took = start.elapsed();
        if let Some(limit) = out.limit.filter(|l| took > *l) {
            out.failure.get_or_insert(format!("took {took:.2?}, limit {limit:.2?}"));
        }
        match &out.failure {
            None => println!("PASS  {name}: {} [{took:.2?}]", out.detail),
            Some(why) => {
                failed += 1;
                println!("FAIL  {name}: {} [{took:.2?}] {why}", out.detail);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn walkthrough_goldens() -> Outcome {
    let cp = walkthrough::run();
    let mut problems = Vec::new();

    let a = &cp.after_logins;
    let empty_summary = |c: &Chain, n| c.block(n).is_some_and(|b| b.is_summary() && b.summary_entries().is_empty());
    if !(empty_summary(a, 2) && empty_summary(a, 5)) {
        problems.push("summaries 2 and 5 are not empty".to_string());
    }
    let b = &cp.after_prune;
    let origins: Vec<EntryRef> = b.head().summary_entries().iter().map(SummaryEntry::origin).collect();
    let blocks_of: Vec<u64> = origins.iter().map(|o| o.block_number).collect();
    let alpha_charlie = ["ALPHA", "CHARLIE"].iter().all(|u| {
        [1, 4]
            .iter()
            .all(|n| b.head().summary_entries().iter().any(|s| s.entry.user() == *u && s.origin_block_number == *n))
    });
    if b.marker() != 6 || b.blocks()[0].number != 6 || origins.contains(&EntryRef::new(3, 1)) || !alpha_charlie {
        problems.push(format!("after prune: marker {}, merged origins {origins:?}", b.marker()));
    }
    let c = &cp.one_cycle_later;
    if c.live_entries().any(|(_, e)| e.as_delete_request().is_some()) {
        problems.push("a deletion request is still stored".into());
    }

    let bless = std::env::var_os("PRUNECHAIN_BLESS").is_some();
    for (file, chain) in [("fig6.txt", a), ("fig7.txt", b), ("fig8.txt", c)] {
        let path = golden_dir().join(file);
        let text = golden_render(chain);
        if bless {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &text).unwrap();
        }
        match std::fs::read_to_string(&path) {
            Ok(expected) if expected == text => {}
            Ok(_) => problems.push(format!("{file} differs")),
            Err(e) => problems.push(format!("{file}: {e}")),
        }
    }
    let detail = format!("marker {} -> {} -> {}, merged blocks {blocks_of:?}", a.marker(), b.marker(), c.marker());
    Outcome::check(detail, (!problems.is_empty()).then(|| problems.join("; "))).within(Duration::from_secs(1))
}

fn ticks_for(config: &ChainConfig) -> u64 {
    3 * config.l_max + 6 * config.delta_l
}

fn shrink_arithmetic() -> Outcome {
    let mut prunes = 0;
    let mut guarded = 0;
    for seed in 0..500 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = random_config(&mut rng);
        let mut d = Driver::new(config.clone(), seed);
        for _ in 0..ticks_for(&config) {
            let step = d.step();
            if let TickOutcome::Summary { guard_blocked: Some(_), .. } = step.outcome {
                guarded += 1;
            }
            match check_shrink(&step, d.chain()) {
                Ok(true) => prunes += 1,
                Ok(false) => {}
                Err(e) => return Outcome::check(format!("seed {seed}"), Some(e)),
            }
        }
    }
    let failure = (prunes == 0).then(|| "no prune happened".to_string());
    Outcome::check(format!("500 schedules, {prunes} prunes, {guarded} guard stops, all exact"), failure)
        .within(Duration::from_secs(10))
}

fn content_preservation() -> Outcome {
    let mut prunes = 0;
    let mut dropped = 0;
    for seed in 0..500 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ffee);
        let config = random_config(&mut rng);
        let mut d = Driver::new(config.clone(), seed ^ 0xc0ffee);
        let mut shadow = Shadow::default();
        for _ in 0..ticks_for(&config) {
            let step = d.step();
            if let Err(e) = shadow.observe(&step, d.chain()) {
                return Outcome::check(format!("seed {seed}"), Some(e));
            }
            if let TickOutcome::Summary { prune: Some(r), .. } = &step.outcome {
                prunes += 1;
                dropped += r.dropped_entries.len();
                if shadow.payloads() != live_payloads(d.chain()) {
                    return Outcome::check(format!("seed {seed}"), Some("payload multisets differ".into()));
                }
            }
        }
    }
    Outcome::pass(format!("500 runs, {prunes} prunes, {dropped} drops predicted")).within(Duration::from_secs(30))
}

fn random_script(rng: &mut ChaCha8Rng, n_nodes: usize, until: u64) -> Vec<ScenarioEvent> {
    let users = walkthrough::USERS;
    let mut script = Vec::new();
    let mut stored: Vec<String> = Vec::new();
    for t in 1..until {
        if rng.random_bool(0.4) {
            let user = users[rng.random_range(0..3)];
            let nodes = rng.random_bool(0.2).then(|| vec![rng.random_range(0..n_nodes as u64)]);
            script.push(ScenarioEvent {
                at: t,
                action: Action::Submit(SubmitParams {
                    user: user.into(),
                    payload: format!("{user} at {t}"),
                    expire_time: rng.random_bool(0.2).then(|| t + rng.random_range(0..10)),
                    expire_block: None,
                    depends_on: vec![],
                    nodes,
                }),
            });
            stored.push(format!("{}.0", t + 1));
        }
        if rng.random_bool(0.1) && !stored.is_empty() {
            let target = stored[rng.random_range(0..stored.len())].clone();
            script.push(ScenarioEvent {
                at: t,
                action: Action::Delete(DeleteParams {
                    user: users[rng.random_range(0..3)].into(),
                    target,
                    cosigners: vec![],
                    nodes: None,
                }),
            });
        }
    }
    script
}

fn summary_determinism() -> Outcome {
    let mut heights = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3 + (seed % 5) as usize;
        let mut config = SimConfig::new(n, seed).with_script(random_script(&mut rng, n, 24));
        config.duration = Some(30);
        let trace = match run_simulation(config.clone()) {
            Ok(t) => t,
            Err(e) => return Outcome::check(format!("seed {seed}"), Some(e.to_string())),
        };
        for e in trace.events() {
            if let TraceEvent::Summary { height, hashes } = e {
                heights += 1;
                let first = hashes.values().next();
                if hashes.len() != n || hashes.values().any(|h| Some(h) != first) {
                    return Outcome::check(
                        format!("seed {seed}"),
                        Some(format!("summary {height} differs: {hashes:?}")),
                    );
                }
            }
        }
        if let Some((h, _)) = trace.sync_results().find(|(_, s)| s.is_fork()) {
            return Outcome::check(format!("seed {seed}"), Some(format!("honest fork at {h}")));
        }
        if seed % 20 == 0 && run_simulation(config).unwrap().to_jsonl() != trace.to_jsonl() {
            return Outcome::check(format!("seed {seed}"), Some("trace is not reproducible".into()));
        }
    }

    let mut detected = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfa17);
        let n = 3 + (seed % 5) as usize;
        let faulty = rng.random_range(0..n as u64);
        let at = rng.random_range(1..20);
        let mode = if seed % 2 == 0 { FaultMode::SummaryInject } else { FaultMode::SummaryAlter };
        let mut script = random_script(&mut rng, n, 24);
        script.push(ScenarioEvent { at, action: Action::Corrupt(CorruptParams { node: faulty, mode }) });
        let mut config = SimConfig::new(n, seed).with_script(script);
        config.duration = Some(30);
        let trace = run_simulation(config).unwrap();
        let next = trace.lines.iter().find_map(|l| match &l.event {
            TraceEvent::Summary { height, .. } if l.t >= at => Some(*height),
            _ => None,
        });
        let status = next.and_then(|h| trace.sync_results().find(|(sh, _)| *sh == h).map(|(_, s)| s));
        match status {
            Some(SyncStatus::Fork { partitions }) if partitions.iter().any(|p| p.nodes == vec![faulty]) => {
                detected += 1
            }
            other => {
                return Outcome::check(
                    format!("fault seed {seed}"),
                    Some(format!("{mode:?} on node {faulty} at {at}: next summary {next:?} gave {other:?}")),
                )
            }
        }
    }
    Outcome::pass(format!("200 honest runs ({heights} summary heights agree), {detected}/100 faults forked"))
        .within(Duration::from_secs(30))
}

/// Reseals blocks from `from` onwards so every link is intact again.
fn relink(blocks: &mut [Block], from: usize) {
    for i in from..blocks.len() {
        if i > 0 {
            blocks[i].previous_hash = blocks[i - 1].own_hash;
        }
        blocks[i].own_hash = blocks[i].compute_hash();
    }
}

fn rebuild(chain: &Chain, blocks: Vec<Block>) -> Chain {
    Chain::from_parts(chain.config().clone(), chain.registry().clone(), blocks, chain.pending_deletions().clone())
        .expect("config unchanged")
}

/// Mutations that each break a hash-link or timestamp rule.
fn mutants(chain: &Chain, rng: &mut ChaCha8Rng) -> Vec<(&'static str, Chain)> {
    let blocks = chain.blocks().to_vec();
    let n = blocks.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let i = rng.random_range(1..n - 1);

    let mut m = blocks.clone();
    m[i].timestamp += 1;
    out.push(("unsealed edit", rebuild(chain, m)));

    let mut m = blocks.clone();
    m[i].previous_hash = Digest::of(b"elsewhere");
    m[i].own_hash = m[i].compute_hash();
    out.push(("foreign link", rebuild(chain, m)));

    let mut m = blocks.clone();
    m[i].own_hash = Digest::of(b"claimed");
    out.push(("forged own hash", rebuild(chain, m)));

    let mut m = blocks.clone();
    if let BlockBody::Normal { nonce, .. } = &mut m[i].body {
        nonce[0] ^= 1;
    } else {
        m[i].timestamp += 1;
    }
    m[i].own_hash = m[i].compute_hash();
    out.push(("resealed without relinking", rebuild(chain, m)));

    let mut m = blocks.clone();
    m.remove(i);
    out.push(("removed block", rebuild(chain, m)));

    let mut m = blocks.clone();
    m.swap(i, i + 1);
    out.push(("swapped blocks", rebuild(chain, m)));

    if let Some(j) = (1..n).find(|&j| blocks[j - 1].timestamp > 0 && !blocks[j].is_summary()) {
        let mut m = blocks.clone();
        m[j].timestamp = m[j - 1].timestamp - 1;
        relink(&mut m, j);
        out.push(("time regression", rebuild(chain, m)));
    }
    if let Some(j) = (1..n).find(|&j| blocks[j].is_summary()) {
        let mut m = blocks.clone();
        m[j].timestamp += 1;
        relink(&mut m, j);
        out.push(("summary time", rebuild(chain, m)));
    }
    out
}

fn post_prune_validity() -> Outcome {
    let mut ops = 0;
    let mut mutations = 0;
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a11d);
        let config = random_config(&mut rng);
        let mut d = Driver::new(config.clone(), seed ^ 0x7a11d);
        for _ in 0..ticks_for(&config) {
            d.step();
            ops += 1;
            if let prunechain::Verdict::Broken { at, reason } = verify_chain(d.chain()) {
                return Outcome::check(format!("seed {seed}"), Some(format!("broken at {at}: {reason:?}")));
            }
        }
        for (kind, mutant) in mutants(d.chain(), &mut rng) {
            mutations += 1;
            if verify_chain(&mutant).is_valid() {
                return Outcome::check(format!("seed {seed}"), Some(format!("{kind} went undetected")));
            }
        }
    }
    Outcome::pass(format!("{ops} operations valid, {mutations}/{mutations} mutations detected"))
}

fn authorization_matrix() -> Outcome {
    let (mut own, mut foreign, mut admin) = (0, 0, 0);
    for case in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let mut node = common::genesis(walkthrough::config());
        for k in 0..rng.random_range(1..=5) {
            let user = walkthrough::USERS[rng.random_range(0..3)];
            node.submit(Entry::data(&walkthrough::keys(user), user, format!("{case}/{k}"), None, vec![])).unwrap();
        }
        node.tick().unwrap();
        let entries = node.chain().block(1).unwrap().entries().len();
        let target = EntryRef::new(1, rng.random_range(0..entries as u64));
        let owner = node.chain().lookup_entry(target).unwrap().entry.user().to_string();
        let requester = match rng.random_range(0..4) {
            3 => walkthrough::ADMIN,
            u => walkthrough::USERS[u],
        };
        node.submit(make_delete_request(&walkthrough::keys(requester), requester, target)).unwrap();
        let (before, decisions) = loop {
            let before = node.chain().clone();
            if let TickOutcome::Normal { decisions, .. } = node.tick().unwrap() {
                break (before, decisions);
            }
        };
        let verdict = &decisions[0].verdict;
        let fail = |why: String| Outcome::check(format!("case {case}: {requester} on {owner}'s {target}"), Some(why));
        let approved = requester == owner || requester == walkthrough::ADMIN;
        if approved != (*verdict == DeletionVerdict::Approved) {
            return fail(format!("verdict {verdict:?}"));
        }
        if !approved {
            if *verdict != DeletionVerdict::NoEffect(NoEffectReason::ForeignEntry) {
                return fail(format!("verdict {verdict:?}"));
            }
            let prefix = &node.chain().blocks()[..node.chain().blocks().len() - 1];
            if rebuild(&before, prefix.to_vec()).digest() != before.digest()
                || node.chain().pending_deletions() != before.pending_deletions()
            {
                return fail("refused request changed the chain".into());
            }
        }
        while node.chain().marker() <= target.block_number {
            node.tick().unwrap();
        }
        if node.chain().lookup_entry(target).is_some() == approved {
            return fail(format!("target present after prune: {}", !approved));
        }
        match (approved, requester == walkthrough::ADMIN) {
            (true, true) => admin += 1,
            (true, false) => own += 1,
            (false, _) => foreign += 1,
        }
    }
    Outcome::pass(format!("1000 cases: {own} own, {admin} admin, {foreign} foreign, 0 violations"))
}

struct ExpiryTrack {
    at: EntryRef,
    kept: Vec<u64>,
    dropped_at: Option<u64>,
}

fn temporary_expiry() -> Outcome {
    let mut node = common::genesis(walkthrough::config());
    node.clock = 1;
    let keys = walkthrough::keys;
    node.submit(Entry::data(&keys("ALPHA"), "ALPHA", "temp-tau", Some(Expiry::ByTime(8888)), vec![])).unwrap();
    node.submit(Entry::data(&keys("BRAVO"), "BRAVO", "temp-alpha", Some(Expiry::ByBlock(4711)), vec![])).unwrap();
    node.tick().unwrap();
    let mut tau = ExpiryTrack { at: EntryRef::new(1, 0), kept: vec![], dropped_at: None };
    let mut alpha = ExpiryTrack { at: EntryRef::new(1, 1), kept: vec![], dropped_at: None };
    let mut violations = Vec::new();
    while tau.dropped_at.is_none() || alpha.dropped_at.is_none() {
        if node.clock > 20_000 {
            violations.push("entries never dropped".to_string());
            break;
        }
        let before = node.chain().clone();
        let out = node.tick().unwrap();
        let TickOutcome::Summary { prune: Some(report), .. } = out else {
            continue;
        };
        let now = before.head().timestamp;
        let head = before.head().number;
        for (track, bound, value, reason) in
            [(&mut tau, 8888, now, DropReason::ExpiredByTime), (&mut alpha, 4711, head, DropReason::ExpiredByBlock)]
        {
            if track.dropped_at.is_some() || track.at.block_number >= report.new_marker {
                continue;
            }
            let dropped = report.dropped_entries.iter().find(|d| d.entry == track.at);
            match (dropped, value > bound) {
                (None, false) if node.chain().lookup_entry(track.at).is_some() => track.kept.push(value),
                (Some(d), true) if d.reason == reason => track.dropped_at = Some(value),
                (d, _) => violations.push(format!("{:?} bound {bound} at {value}: {d:?}", track.at)),
            }
        }
        if !violations.is_empty() {
            break;
        }
    }
    for (track, bound) in [(&tau, 8888), (&alpha, 4711)] {
        if track.kept.last() != Some(&bound) {
            violations.push(format!("no summarization exactly at {bound}: last kept {:?}", track.kept.last()));
        }
    }
    let boundary = |v: u64, b: u64| {
        let e = Entry::data(&keys("ALPHA"), "ALPHA", "x", Some(Expiry::ByTime(b)), vec![]);
        prunechain::summarize::apply_expiry(&e, v, 0)
    };
    if boundary(8888, 8888) != prunechain::summarize::ExpiryVerdict::Keep
        || boundary(8889, 8888) == prunechain::summarize::ExpiryVerdict::Keep
    {
        violations.push("apply_expiry boundary".into());
    }
    let show = |v: Option<u64>| v.map_or("never".to_string(), |v| v.to_string());
    let detail = format!(
        "τ8888 kept at τ={}, dropped at τ={}; α4711 kept at α={}, dropped at α={}",
        show(tau.kept.last().copied()),
        show(tau.dropped_at),
        show(alpha.kept.last().copied()),
        show(alpha.dropped_at)
    );
    Outcome::check(detail, (!violations.is_empty()).then(|| violations.join("; ")))
}

fn brute_root(entries: &[SummaryEntry]) -> Digest {
    let mut level: Vec<[u8; 32]> = entries
        .iter()
        .map(|e| Sha256::new().chain_update([0u8]).chain_update(e.canonical_bytes()).finalize().into())
        .collect();
    if level.is_empty() {
        return Digest(Sha256::digest(b"").into());
    }
    loop {
        let mut next = Vec::new();
        let mut i = 0;
        while i < level.len() {
            let right = if i + 1 < level.len() { level[i + 1] } else { level[i] };
            next.push(Sha256::new().chain_update([1u8]).chain_update(level[i]).chain_update(right).finalize().into());
            i += 2;
        }
        level = next;
        if level.len() == 1 {
            return Digest(level[0]);
        }
    }
}

/// Data entries of the blocks `first..=last`, with their original
/// coordinates, ordered by origin.
fn collect_sequence(chain: &Chain, first: u64, last: u64) -> Option<Vec<SummaryEntry>> {
    let mut out = Vec::new();
    for n in first..=last {
        let b = chain.block(n)?;
        for (i, e) in b.entries().iter().enumerate() {
            if e.as_data().is_some() {
                out.push(SummaryEntry {
                    origin_block_number: n,
                    origin_timestamp: b.timestamp,
                    origin_entry_number: i as u64,
                    entry: e.clone(),
                });
            }
        }
        out.extend(b.summary_entries().iter().cloned());
    }
    out.sort_by_key(|s| (s.origin_block_number, s.origin_entry_number));
    Some(out)
}

fn confirmation_depth() -> Outcome {
    let mut states = 0;
    let mut covered = 0;
    let mut roots = 0;
    // A single reference per summary can only keep up while the live chain
    // spans at least three sequences.
    let mut configs = vec![(3, 12, 3), (3, 20, 6), (4, 16, 4), (5, 24, 5), (2, 10, 4), (6, 30, 12)];
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    while configs.len() < 30 {
        let delta_l = rng.random_range(2..=10u64);
        let l_max = rng.random_range(3 * delta_l..=60);
        configs.push((delta_l, l_max, rng.random_range(delta_l..=l_max + 2 - delta_l)));
    }
    for (idx, &(delta_l, l_max, l_min)) in configs.iter().enumerate() {
        for seed in 0..5u64 {
            let config = ChainConfig { l_min, ..ChainConfig::new(delta_l, l_max) }.with_redundancy(true);
            let mut d = Driver::new(config, seed + 100 * idx as u64);
            d.rate = 0.7;
            while d.chain().head().number < 60 {
                let Step { .. } = d.step();
                let chain = d.chain();
                if chain.marker() == 0 {
                    continue;
                }
                states += 1;
                let refs: BTreeMap<u64, (u64, Digest)> = chain
                    .blocks()
                    .iter()
                    .filter_map(|b| b.redundancy().map(|r| (b.number, (r.sequence_index, r.merkle_root))))
                    .collect();
                for (index, root) in refs.values() {
                    let first = (index - 1) * delta_l;
                    if let Some(entries) = collect_sequence(chain, first, first + delta_l - 1) {
                        roots += 1;
                        if brute_root(&entries) != *root {
                            return Outcome::check(
                                format!("config {idx} seed {seed}"),
                                Some(format!("root of sequence {index} differs")),
                            );
                        }
                    }
                }
                let len = chain.len();
                let head = chain.head().number;
                for b in chain.blocks() {
                    let has_data = !b.summary_entries().is_empty() || b.entries().iter().any(|e| e.as_data().is_some());
                    if !has_data || head - b.number < len.div_ceil(2) {
                        continue;
                    }
                    let index = b.number / delta_l + 1;
                    let ok = refs.iter().any(|(at, (i, _))| *at > b.number && *i == index);
                    if !ok {
                        return Outcome::check(
                            format!("config {:?} seed {seed}", configs[idx]),
                            Some(format!(
                                "block {} (head {head}, length {len}) has no younger redundancy root",
                                b.number
                            )),
                        );
                    }
                    covered += 1;
                }
            }
        }
    }
    Outcome::pass(format!("{states} chain states, {covered} old blocks covered, {roots} roots recomputed"))
}
