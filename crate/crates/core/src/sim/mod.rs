//! Deterministic discrete-event simulation of an anchor-node quorum.
//!
//! Time advances in ticks. Within a tick the simulator
//!
//! 1. runs the script events due at this tick,
//! 2. delivers due messages in `(deliver_at, sender, arrival)` order,
//! 3. runs one block round per network partition, and
//! 4. compares summary hashes when a summary height was reached.
//!
//! Gossip (entries, summary-hash announcements, sync traffic) travels with a
//! latency drawn from a seeded generator. A block round (proposal, votes and
//! commit) completes within its tick. Summary blocks are never sent: every
//! node builds them itself.

pub mod anchor;
pub mod client;
pub mod quorum;
pub mod scenario;
pub mod trace;

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ballot::{Ballot, BallotSubject};
use crate::chain::{Chain, FIXTURE_GENESIS_PREVIOUS_HASH};
use crate::config::ChainConfig;
use crate::crypto::{Digest, KeyPair};
use crate::model::{Block, BlockNumber, Cosignature, Entry, Expiry, Tick};
use crate::registry::Registry;
use crate::summarize;
use crate::verify::verify_chain;

pub use anchor::{proposer_for, AnchorNode};
pub use client::{client_sync, status_quo, ClientRejection, ClientVerdict};
pub use quorum::{hold_ballot, sync_check, Partition, SyncError, SyncStatus};
pub use scenario::{parse_script, Action, FaultMode, ScenarioEvent, ScriptError};
pub use trace::{MessageKind, NodeSnapshot, Trace, TraceEvent};

pub type NodeId = u64;

/// Sender id of the clients submitting scripted entries.
pub const CLIENT: NodeId = u64::MAX;

pub const ADMIN: &str = "QUORUM";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("node {node} is not the proposer for height {height} (node {proposer} is)")]
    NotProposer { height: BlockNumber, proposer: NodeId, node: NodeId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latency {
    pub min: Tick,
    pub max: Tick,
}

impl Default for Latency {
    fn default() -> Self {
        Latency { min: 0, max: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub seed: u64,
    #[serde(default)]
    pub latency: Latency,
    #[serde(default = "default_chain")]
    pub chain: ChainConfig,
    #[serde(default = "default_heartbeat")]
    pub heartbeat_interval: Tick,
    #[serde(default = "default_users")]
    pub users: Vec<String>,
    #[serde(default)]
    pub script: Vec<ScenarioEvent>,
    /// Last tick to simulate. Defaults to a margin after the last event.
    #[serde(default)]
    pub duration: Option<Tick>,
}

fn default_chain() -> ChainConfig {
    ChainConfig { l_min: 3, ..ChainConfig::new(3, 5) }
}

fn default_heartbeat() -> Tick {
    1
}

fn default_users() -> Vec<String> {
    ["ALPHA", "BRAVO", "CHARLIE"].map(String::from).to_vec()
}

impl SimConfig {
    pub fn new(n_nodes: usize, seed: u64) -> Self {
        SimConfig {
            n_nodes,
            seed,
            latency: Latency::default(),
            chain: default_chain(),
            heartbeat_interval: default_heartbeat(),
            users: default_users(),
            script: Vec::new(),
            duration: None,
        }
    }

    pub fn with_script(mut self, script: Vec<ScenarioEvent>) -> Self {
        self.script = script;
        self
    }

    pub fn end_tick(&self) -> Tick {
        self.duration.unwrap_or_else(|| {
            let last = self.script.iter().map(|e| e.at).max().unwrap_or(0);
            last + 2 * (self.chain.l_max + self.chain.delta_l) * self.heartbeat_interval + self.latency.max
        })
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        if self.n_nodes == 0 {
            return Err(ScriptError::NoNodes);
        }
        if self.latency.min > self.latency.max {
            return Err(ScriptError::Latency { min: self.latency.min, max: self.latency.max });
        }
        self.chain_config().validate()?;
        let mut known = self.users.clone();
        known.push(ADMIN.to_string());
        self.script.iter().try_for_each(|e| scenario::validate_event(e, self.n_nodes, &known))
    }

    fn chain_config(&self) -> ChainConfig {
        ChainConfig { heartbeat_interval: self.heartbeat_interval, ..self.chain.clone() }
    }
}

#[derive(Clone, Debug)]
enum Payload {
    SubmitEntry(Entry),
    SummaryHashAnnounce { height: BlockNumber, hash: Digest },
    SyncRequest,
    SyncResponse { chain: Box<Chain>, hashes: BTreeMap<BlockNumber, Digest> },
}

impl Payload {
    fn kind(&self) -> MessageKind {
        match self {
            Payload::SubmitEntry(_) => MessageKind::SubmitEntry,
            Payload::SummaryHashAnnounce { .. } => MessageKind::SummaryHashAnnounce,
            Payload::SyncRequest => MessageKind::SyncRequest,
            Payload::SyncResponse { .. } => MessageKind::SyncResponse,
        }
    }
}

#[derive(Clone, Debug)]
struct Message {
    to: NodeId,
    payload: Payload,
}

pub struct Simulation {
    config: SimConfig,
    nodes: Vec<AnchorNode>,
    keys: BTreeMap<String, KeyPair>,
    queue: BTreeMap<(Tick, NodeId, u64), Message>,
    arrivals: u64,
    rng: ChaCha8Rng,
    now: Tick,
    groups: Vec<Vec<NodeId>>,
    script: VecDeque<ScenarioEvent>,
    trace: Trace,
}

impl Simulation {
    pub fn new(mut config: SimConfig) -> Result<Self, ScriptError> {
        config.validate()?;
        config.script.sort_by_key(|e| e.at);
        let mut keys = BTreeMap::new();
        let mut registry = Registry::new();
        for user in &config.users {
            let kp = KeyPair::derive(user, 0);
            registry.register_user(user, kp.public()).map_err(|e| ScriptError::Yaml(e.to_string()))?;
            keys.insert(user.clone(), kp);
        }
        let admin = KeyPair::derive(ADMIN, 0);
        registry.set_admin(ADMIN, admin.public()).map_err(|e| ScriptError::Yaml(e.to_string()))?;
        keys.insert(ADMIN.to_string(), admin);
        let genesis = Chain::new(config.chain_config(), registry, FIXTURE_GENESIS_PREVIOUS_HASH, 0)
            .map_err(|e| ScriptError::Yaml(e.to_string()))?;
        let nodes = (0..config.n_nodes as NodeId).map(|id| AnchorNode::new(id, genesis.clone())).collect();
        Ok(Simulation {
            groups: vec![(0..config.n_nodes as NodeId).collect()],
            script: config.script.iter().cloned().collect(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            nodes,
            keys,
            queue: BTreeMap::new(),
            arrivals: 0,
            now: 0,
            trace: Trace::default(),
        })
    }

    pub fn nodes(&self) -> &[AnchorNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &AnchorNode {
        &self.nodes[id as usize]
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Runs to the configured end tick and appends the final node states.
    pub fn run(mut self) -> (Trace, Vec<AnchorNode>) {
        while self.now < self.config.end_tick() {
            self.step();
        }
        let snapshot = self
            .nodes
            .iter()
            .map(|n| NodeSnapshot {
                node: n.node_id,
                head: n.chain.head().number,
                head_hash: n.chain.head().own_hash,
                marker: n.chain.marker(),
                digest: n.chain.digest(),
                faulty: n.faulty(),
            })
            .collect();
        self.trace.push(self.now, TraceEvent::Final { nodes: snapshot });
        (self.trace, self.nodes)
    }

    /// Simulates one tick.
    pub fn step(&mut self) {
        self.now += 1;
        while self.script.front().is_some_and(|e| e.at <= self.now) {
            let event = self.script.pop_front().expect("checked non-empty");
            self.run_event(event);
        }
        self.deliver_due();
        let groups = self.groups.clone();
        for group in &groups {
            self.block_round(group);
        }
        self.request_syncs();
    }

    fn send(&mut self, sender: NodeId, to: NodeId, payload: Payload) {
        let latency = self.rng.random_range(self.config.latency.min..=self.config.latency.max);
        let deliver_at = self.now + latency;
        self.arrivals += 1;
        self.queue.insert((deliver_at, sender, self.arrivals), Message { to, payload });
    }

    fn group_of(&self, node: NodeId) -> usize {
        self.groups.iter().position(|g| g.contains(&node)).expect("groups cover all nodes")
    }

    fn reachable(&self, a: NodeId, b: NodeId) -> bool {
        a == CLIENT || b == CLIENT || self.group_of(a) == self.group_of(b)
    }

    fn run_event(&mut self, event: ScenarioEvent) {
        self.trace.push(self.now, TraceEvent::Script { step: event.clone() });
        let at = event.at;
        let all: Vec<NodeId> = (0..self.config.n_nodes as NodeId).collect();
        match event.action {
            Action::Submit(p) => {
                let keys = &self.keys[&p.user];
                let expiry = match (p.expire_time, p.expire_block) {
                    (Some(t), _) => Some(Expiry::ByTime(t)),
                    (None, Some(b)) => Some(Expiry::ByBlock(b)),
                    (None, None) => None,
                };
                let deps = p.depends_on.iter().map(|d| scenario::parse_ref(at, d).expect("validated")).collect();
                let entry = Entry::data(keys, &p.user, p.payload.into_bytes(), expiry, deps);
                for to in p.nodes.unwrap_or(all) {
                    self.send(CLIENT, to, Payload::SubmitEntry(entry.clone()));
                }
            }
            Action::Delete(p) => {
                let target = scenario::parse_ref(at, &p.target).expect("validated");
                let cosigs = p.cosigners.iter().map(|c| Cosignature::sign(&self.keys[c], c, target)).collect();
                let entry = Entry::delete_request(&self.keys[&p.user], &p.user, target, cosigs);
                for to in p.nodes.unwrap_or(all) {
                    self.send(CLIENT, to, Payload::SubmitEntry(entry.clone()));
                }
            }
            Action::Corrupt(p) => self.nodes[p.node as usize].apply_fault(p.mode),
            Action::Partition(p) => {
                self.groups = if p.groups.is_empty() {
                    vec![all]
                } else {
                    let mut groups: Vec<Vec<NodeId>> = p
                        .groups
                        .into_iter()
                        .map(|mut g| {
                            g.sort_unstable();
                            g
                        })
                        .collect();
                    groups.sort();
                    groups
                };
            }
            Action::Idle => {}
        }
    }

    fn deliver_due(&mut self) {
        while let Some(entry) = self.queue.first_entry() {
            let (deliver_at, sender, _) = *entry.key();
            if deliver_at > self.now {
                break;
            }
            let msg = entry.remove();
            let dropped = !self.reachable(sender, msg.to);
            self.trace.push(
                self.now,
                TraceEvent::Message { kind: msg.payload.kind(), sender, to: msg.to, deliver_at, dropped },
            );
            if dropped {
                match msg.payload {
                    Payload::SyncRequest => self.nodes[sender as usize].awaiting_sync = false,
                    Payload::SyncResponse { .. } => self.nodes[msg.to as usize].awaiting_sync = false,
                    _ => {}
                }
                continue;
            }
            self.handle(sender, msg);
        }
    }

    fn handle(&mut self, sender: NodeId, msg: Message) {
        let to = msg.to;
        match msg.payload {
            Payload::SubmitEntry(entry) => self.nodes[to as usize].receive_entry(entry),
            Payload::SummaryHashAnnounce { height, hash } => {
                let node = &self.nodes[to as usize];
                if node.summary_hashes.get(&height).is_some_and(|own| *own != hash) {
                    self.trace.push(self.now, TraceEvent::SummaryMismatch { node: to, from: sender, height });
                }
            }
            Payload::SyncRequest => {
                let responder = &self.nodes[to as usize];
                let payload = Payload::SyncResponse {
                    chain: Box::new(responder.chain.clone()),
                    hashes: responder.summary_hashes.clone(),
                };
                self.send(to, sender, payload);
            }
            Payload::SyncResponse { chain, hashes } => self.install(to, sender, *chain, hashes),
        }
    }

    /// Replaces a node's chain with a peer's snapshot and replays the
    /// committed blocks the node saw meanwhile.
    fn install(&mut self, id: NodeId, from: NodeId, chain: Chain, hashes: BTreeMap<BlockNumber, Digest>) {
        let node = &mut self.nodes[id as usize];
        node.awaiting_sync = false;
        if !verify_chain(&chain).is_valid() {
            return;
        }
        node.chain = chain;
        for (h, d) in hashes {
            node.summary_hashes.entry(h).or_insert(d);
        }
        for block in std::mem::take(&mut node.backlog) {
            if block.number < node.chain.next_number() {
                continue;
            }
            while summarize::needs_summary(node.chain.config(), node.chain.next_number())
                && node.chain.next_number() < block.number
            {
                match summarize::close_sequence(&mut node.chain) {
                    Ok(out) => {
                        node.summary_hashes.insert(out.block_number, out.hash);
                    }
                    Err(_) => break,
                }
            }
            if node.chain.append(block).is_err() {
                break;
            }
        }
        let included: Vec<Block> = node.chain.blocks().to_vec();
        for b in &included {
            node.forget_included(b);
        }
        node.needs_sync = None;
        let head = node.chain.head().number;
        self.trace.push(self.now, TraceEvent::Resync { node: id, from, head });
    }

    fn request_syncs(&mut self) {
        let requests: Vec<(NodeId, NodeId)> = self
            .nodes
            .iter()
            .filter(|n| !n.awaiting_sync)
            .filter_map(|n| n.needs_sync.map(|peer| (n.node_id, peer)))
            .collect();
        for (node, peer) in requests {
            self.nodes[node as usize].awaiting_sync = true;
            self.send(node, peer, Payload::SyncRequest);
        }
    }

    /// Height most nodes of the group are about to fill; ties go to the
    /// lower height.
    fn group_height(&self, group: &[NodeId]) -> BlockNumber {
        let mut counts: BTreeMap<BlockNumber, usize> = BTreeMap::new();
        for id in group {
            *counts.entry(self.node(*id).chain.next_number()).or_default() += 1;
        }
        let best = counts.values().copied().max().expect("groups are non-empty");
        counts.into_iter().find(|(_, c)| *c == best).map(|(h, _)| h).expect("max exists")
    }

    fn block_round(&mut self, group: &[NodeId]) {
        let height = self.group_height(group);
        if summarize::needs_summary(&self.config.chain, height) {
            self.summary_round(group, height);
        } else {
            self.normal_round(group, height);
        }
    }

    fn summary_round(&mut self, group: &[NodeId], height: BlockNumber) {
        let participants: Vec<NodeId> =
            group.iter().copied().filter(|id| self.node(*id).chain.next_number() == height).collect();
        let reference =
            participants.iter().copied().find(|id| *id == proposer_for(height, group)).unwrap_or(participants[0]);
        let ballot = summarize::planned_marker(&self.node(reference).chain).map(|new_marker| {
            let voters: Vec<&AnchorNode> = participants.iter().map(|id| self.node(*id)).collect();
            hold_ballot(&voters, BallotSubject::MarkerShift { new_marker })
        });
        if let Some(b) = &ballot {
            self.log_ballot(reference, &participants, b);
        }
        let n = participants.len();
        let approve = |subject: BallotSubject| match &ballot {
            Some(b) if b.subject == subject => b.clone(),
            _ => Ballot::tally(subject, n, BTreeMap::new()),
        };
        let mut hashes = BTreeMap::new();
        for id in &participants {
            let node = &mut self.nodes[*id as usize];
            let outcome = match node.take_tamper() {
                Some(tamper) => summarize::close_sequence_with(&mut node.chain, &approve, tamper),
                None => summarize::close_sequence_with(&mut node.chain, &approve, |_| {}),
            };
            let outcome = match outcome {
                Ok(o) => o,
                Err(_) => continue,
            };
            node.summary_hashes.insert(height, outcome.hash);
            hashes.insert(*id, outcome.hash);
            if *id == reference {
                if let Some(report) = outcome.report {
                    self.trace.push(self.now, TraceEvent::Prune { node: *id, report });
                }
                if let Some(guard) = outcome.guard_blocked {
                    self.trace.push(self.now, TraceEvent::GuardBlocked { node: *id, height, guard });
                }
            }
        }
        self.trace.push(self.now, TraceEvent::Summary { height, hashes: hashes.clone() });
        for (id, hash) in &hashes {
            for peer in 0..self.config.n_nodes as NodeId {
                if peer != *id {
                    self.send(*id, peer, Payload::SummaryHashAnnounce { height, hash: *hash });
                }
            }
        }
        self.check_sync(height);
    }

    fn check_sync(&mut self, height: BlockNumber) {
        let all: Vec<&AnchorNode> = self.nodes.iter().collect();
        match sync_check(&all, height) {
            Ok(status) => {
                if let SyncStatus::Fork { partitions } = &status {
                    let majority = partitions.first().filter(|p| p.nodes.len() * 2 > self.nodes.len()).cloned();
                    if let Some(majority) = majority {
                        let peer = majority.nodes[0];
                        for p in &partitions[1..] {
                            for id in &p.nodes {
                                self.nodes[*id as usize].needs_sync = Some(peer);
                            }
                        }
                    }
                }
                self.trace.push(self.now, TraceEvent::Sync { height, status });
            }
            Err(error) => {
                // Nodes of other partitions may fill this height later in
                // the same tick.
                if self.groups.len() == 1 {
                    self.trace.push(self.now, TraceEvent::SyncFailed { error });
                }
            }
        }
    }

    fn normal_round(&mut self, group: &[NodeId], height: BlockNumber) {
        let proposer = proposer_for(height, group);
        let Ok(Some(block)) = self.node(proposer).produce_block(group, self.now) else {
            return;
        };
        let (committed, accepted) = match self.vote_on(group, proposer, &block) {
            Some(accepted) => (block, accepted),
            None => {
                let Some(filtered) = self.node(proposer).filtered(&block) else {
                    return;
                };
                if filtered == block {
                    return;
                }
                match self.vote_on(group, proposer, &filtered) {
                    Some(accepted) => (filtered, accepted),
                    None => return,
                }
            }
        };
        self.commit(group, proposer, committed, accepted);
    }

    /// Collects the group's votes on a proposal. Returns the accepting
    /// nodes when a strict majority accepts.
    fn vote_on(&mut self, group: &[NodeId], proposer: NodeId, block: &Block) -> Option<Vec<NodeId>> {
        let mut accepted = Vec::new();
        for id in group {
            if *id != proposer {
                for kind in [MessageKind::ProposeBlock, MessageKind::BallotVote] {
                    let (sender, to) =
                        if kind == MessageKind::ProposeBlock { (proposer, *id) } else { (*id, proposer) };
                    self.trace
                        .push(self.now, TraceEvent::Message { kind, sender, to, deliver_at: self.now, dropped: false });
                }
            }
            if self.node(*id).chain.check_append(block).is_ok() {
                accepted.push(*id);
            }
        }
        if accepted.len() * 2 > group.len() {
            Some(accepted)
        } else {
            self.trace.push(
                self.now,
                TraceEvent::ProposalRejected {
                    height: block.number,
                    proposer,
                    yes: accepted.len(),
                    no: group.len() - accepted.len(),
                },
            );
            None
        }
    }

    fn commit(&mut self, group: &[NodeId], proposer: NodeId, block: Block, accepted: Vec<NodeId>) {
        self.trace.push(
            self.now,
            TraceEvent::Block {
                height: block.number,
                kind: block.kind(),
                proposer,
                hash: block.own_hash,
                entries: block.entries().len(),
                accepted_by: accepted.clone(),
            },
        );
        let mut decisions = None;
        for id in group {
            let node = &mut self.nodes[*id as usize];
            node.forget_included(&block);
            if accepted.contains(id) {
                let d = node.chain.append(block.clone()).expect("vote checked the append");
                decisions.get_or_insert(d);
            } else {
                node.backlog.push(block.clone());
                node.needs_sync = Some(proposer);
            }
        }
        for decision in decisions.unwrap_or_default() {
            self.trace.push(self.now, TraceEvent::Deletion { node: proposer, decision: decision.clone() });
            if !decision.is_approved() {
                continue;
            }
            let subject = BallotSubject::ApproveDeletion { target: decision.target };
            let ballot = {
                let voters: Vec<&AnchorNode> = accepted.iter().map(|id| self.node(*id)).collect();
                hold_ballot(&voters, subject)
            };
            self.log_ballot(proposer, &accepted, &ballot);
            if !ballot.approved {
                for id in &accepted {
                    self.nodes[*id as usize].chain.unmark(decision.target);
                }
            }
        }
    }

    fn log_ballot(&mut self, coordinator: NodeId, voters: &[NodeId], ballot: &Ballot) {
        for id in voters {
            if *id == coordinator {
                continue;
            }
            for (kind, sender, to) in
                [(MessageKind::BallotRequest, coordinator, *id), (MessageKind::BallotVote, *id, coordinator)]
            {
                self.trace
                    .push(self.now, TraceEvent::Message { kind, sender, to, deliver_at: self.now, dropped: false });
            }
        }
        self.trace.push(self.now, TraceEvent::Ballot { ballot: ballot.clone() });
    }
}

/// Runs a simulation to its end tick.
pub fn run_simulation(config: SimConfig) -> Result<Trace, ScriptError> {
    Ok(Simulation::new(config)?.run().0)
}

/// Yes votes a ballot needs to pass in a quorum of `n`.
pub fn majority(n: usize) -> usize {
    n / 2 + 1
}
