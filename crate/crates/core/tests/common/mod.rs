//! Random single-node schedules and an independent replay of the drop rules.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use prunechain::model::{BlockNumber, Entry, EntryRef, Expiry, Tick};
use prunechain::node::{walkthrough, Node, TickOutcome};
use prunechain::{Chain, ChainConfig, FIXTURE_GENESIS_PREVIOUS_HASH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const USERS: [&str; 3] = walkthrough::USERS;
pub const ADMIN: &str = walkthrough::ADMIN;

/// A valid config with `delta_l` in `[2, 10]` and `l_max` in `[6, 60]`.
pub fn random_config(rng: &mut ChaCha8Rng) -> ChainConfig {
    let delta_l = rng.random_range(2..=10u64);
    let l_max = rng.random_range((2 * delta_l).saturating_sub(2).max(6)..=60);
    let l_min = rng.random_range(delta_l..=l_max + 2 - delta_l);
    ChainConfig {
        delta_l,
        l_max,
        l_min,
        min_summary_blocks: rng.random_range(1..=3),
        min_time_coverage: rng.random_range(0..=2 * delta_l),
        heartbeat_interval: rng.random_range(1..=2),
        redundancy_enabled: rng.random_bool(0.5),
    }
}

pub fn genesis(config: ChainConfig) -> Node {
    Node::new(Chain::new(config, walkthrough::registry(), FIXTURE_GENESIS_PREVIOUS_HASH, 0).expect("valid config"))
}

pub struct Step {
    pub before: Chain,
    pub outcome: TickOutcome,
}

/// Drives a node with random submissions: data entries, some temporary,
/// some depending on earlier entries, and deletion requests by owners,
/// strangers and the admin.
pub struct Driver {
    pub node: Node,
    pub rng: ChaCha8Rng,
    pub rate: f64,
    counter: u64,
}

impl Driver {
    pub fn new(config: ChainConfig, seed: u64) -> Self {
        Driver { node: genesis(config), rng: ChaCha8Rng::seed_from_u64(seed), rate: 0.4, counter: 0 }
    }

    pub fn chain(&self) -> &Chain {
        self.node.chain()
    }

    pub fn step(&mut self) -> Step {
        if self.rng.random_bool(self.rate) {
            for _ in 0..self.rng.random_range(1..=2) {
                let entry = if self.rng.random_bool(0.75) { self.data_entry() } else { self.request() };
                if let Some(e) = entry {
                    let _ = self.node.submit(e);
                }
            }
        }
        let before = self.node.chain().clone();
        let outcome = self.node.tick().expect("tick on a valid chain");
        Step { before, outcome }
    }

    fn pick<T: Clone>(&mut self, items: &[T]) -> Option<T> {
        if items.is_empty() {
            None
        } else {
            Some(items[self.rng.random_range(0..items.len())].clone())
        }
    }

    fn data_entry(&mut self) -> Option<Entry> {
        self.counter += 1;
        let user = self.pick(&USERS)?;
        let chain = self.node.chain();
        let (clock, head, delta) = (self.node.clock, chain.head().number, chain.config().delta_l);
        let expiry = match self.rng.random_range(0..10) {
            0..=1 => Some(Expiry::ByTime(clock + self.rng.random_range(0..6 * delta))),
            2..=3 => Some(Expiry::ByBlock(head + self.rng.random_range(0..6 * delta))),
            _ => None,
        };
        let deps = if self.rng.random_bool(0.25) {
            let candidates: Vec<EntryRef> = self
                .node
                .chain()
                .live_entries()
                .filter(|(r, e)| e.as_data().is_some() && !self.node.chain().is_marked(*r))
                .map(|(r, _)| r)
                .collect();
            self.pick(&candidates).into_iter().collect()
        } else {
            vec![]
        };
        let payload = format!("{}#{}", user.to_lowercase(), self.counter);
        Some(Entry::data(&walkthrough::keys(user), user, payload, expiry, deps))
    }

    fn request(&mut self) -> Option<Entry> {
        let live: Vec<(EntryRef, String)> =
            self.node.chain().live_entries().map(|(r, e)| (r, e.user().to_string())).collect();
        let (target, owner) = self.pick(&live)?;
        let requester = match self.rng.random_range(0..10) {
            0..=4 => owner,
            5..=7 => self.pick(&USERS)?.to_string(),
            _ => ADMIN.to_string(),
        };
        Some(Entry::delete_request(&walkthrough::keys(&requester), &requester, target, vec![]))
    }
}

/// A full-history log replayed through the drop rules.
#[derive(Default)]
pub struct Shadow {
    /// Entries still stored somewhere, with the block currently holding them.
    alive: BTreeMap<EntryRef, (Entry, BlockNumber)>,
    marked: BTreeSet<EntryRef>,
}

impl Shadow {
    fn predict(&self, request: &Entry) -> bool {
        let req = request.as_delete_request().expect("request");
        let Some((target, _)) = self.alive.get(&req.target) else {
            return false;
        };
        let admin = req.user == ADMIN;
        let owner = target.as_data().is_some() && target.user() == req.user;
        if !admin && !owner {
            return false;
        }
        let mut stack = vec![req.target];
        let mut seen = BTreeSet::new();
        while let Some(t) = stack.pop() {
            for (r, (e, _)) in &self.alive {
                if self.marked.contains(r) || *r == req.target || seen.contains(r) {
                    continue;
                }
                if e.depends_on().contains(&t) {
                    if e.user() != req.user {
                        return false;
                    }
                    seen.insert(*r);
                    stack.push(*r);
                }
            }
        }
        true
    }

    /// Replays one tick; returns a description of the first disagreement.
    pub fn observe(&mut self, step: &Step, after: &Chain) -> Result<(), String> {
        match &step.outcome {
            TickOutcome::Normal { block, decisions, .. } => {
                let b = after.block(*block).expect("appended block");
                let mut k = 0;
                for (i, e) in b.entries().iter().enumerate() {
                    self.alive.insert(EntryRef::new(*block, i as u64), (e.clone(), *block));
                }
                for e in b.entries() {
                    if let Some(req) = e.as_delete_request() {
                        let expected = self.predict(e);
                        if decisions[k].is_approved() != expected {
                            return Err(format!("request for {} judged {:?}", req.target, decisions[k].verdict));
                        }
                        if expected {
                            self.marked.insert(req.target);
                        }
                        k += 1;
                    }
                }
            }
            TickOutcome::Summary { block, prune: Some(report), .. } => {
                let now: Tick = step.before.head().timestamp;
                let head = step.before.head().number;
                let cut: Vec<EntryRef> =
                    self.alive.iter().filter(|(_, (_, h))| *h < report.new_marker).map(|(r, _)| *r).collect();
                for r in cut {
                    let (e, _) = &self.alive[&r];
                    let expired = match e.as_data().and_then(|d| d.expiry) {
                        Some(Expiry::ByTime(t)) => t < now,
                        Some(Expiry::ByBlock(b)) => b < head,
                        None => false,
                    };
                    if e.as_delete_request().is_some() || self.marked.contains(&r) || expired {
                        self.alive.remove(&r);
                        self.marked.remove(&r);
                    } else {
                        self.alive.get_mut(&r).unwrap().1 = *block;
                    }
                }
            }
            _ => {}
        }
        let live: BTreeMap<EntryRef, &Entry> = after.live_entries().collect();
        if live.len() != self.alive.len() || live.iter().any(|(r, e)| self.alive.get(r).map(|(s, _)| s) != Some(*e)) {
            return Err(format!(
                "live {:?} vs predicted {:?}",
                live.keys().collect::<Vec<_>>(),
                self.alive.keys().collect::<Vec<_>>()
            ));
        }
        Ok(())
    }

    pub fn payloads(&self) -> Vec<Vec<u8>> {
        let mut out: Vec<Vec<u8>> =
            self.alive.values().filter_map(|(e, _)| e.as_data().map(|d| d.payload.clone())).collect();
        out.sort();
        out
    }
}

/// Sorted payloads of every live data entry.
pub fn live_payloads(chain: &Chain) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> =
        chain.live_entries().filter_map(|(_, e)| e.as_data().map(|d| d.payload.clone())).collect();
    out.sort();
    out
}

/// Length bookkeeping of a summary tick, checked against the chains on
/// either side of it.
pub fn check_shrink(step: &Step, after: &Chain) -> Result<bool, String> {
    let TickOutcome::Summary { prune, guard_blocked, .. } = &step.outcome else {
        return Ok(false);
    };
    let l_old = step.before.len();
    let l_max = after.config().l_max;
    match prune {
        Some(r) => {
            let merged: u64 = r.merged_sequences.iter().map(|s| s.last_block - s.first_block + 1).sum();
            if r.old_length != l_old || r.new_length != after.len() || after.len() != l_old + 1 - merged {
                return Err(format!("l_old {l_old}, merged {merged}, l_new {} (report {:?})", after.len(), r));
            }
            if r.stopped_by.is_none() && after.len() > l_max {
                return Err(format!("length {} over {l_max} without a guard", after.len()));
            }
            Ok(true)
        }
        None if l_old > l_max && guard_blocked.is_none() => Err(format!("length {l_old} over {l_max}, no prune")),
        None => Ok(false),
    }
}
