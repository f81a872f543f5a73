//! Scenario scripts: a YAML list of timed events.
//!
//! ```yaml
//! - at: 1
//!   action: submit
//!   params: { user: ALPHA, payload: '{"event":"login"}' }
//! - at: 6
//!   action: delete
//!   params: { user: BRAVO, target: "3.1" }
//! - at: 9
//!   action: corrupt
//!   params: { node: 2, mode: summary-alter }
//! - at: 12
//!   action: partition
//!   params: { groups: [[0, 1], [2, 3]] }
//! - at: 30
//!   action: idle
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::model::{EntryRef, Tick};

use super::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("malformed scenario: {0}")]
    Yaml(String),
    #[error("event at {at}: unknown user {user:?}")]
    UnknownUser { at: Tick, user: String },
    #[error("event at {at}: bad entry reference {value:?}")]
    BadRef { at: Tick, value: String },
    #[error("event at {at}: no node {node}")]
    UnknownNode { at: Tick, node: NodeId },
    #[error("event at {at}: partition groups must cover every node exactly once")]
    BadPartition { at: Tick },
    #[error("simulation needs at least one node")]
    NoNodes,
    #[error("latency min {min} exceeds max {max}")]
    Latency { min: Tick, max: Tick },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub at: Tick,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "params", rename_all = "snake_case")]
pub enum Action {
    Submit(SubmitParams),
    Delete(DeleteParams),
    Corrupt(CorruptParams),
    Partition(PartitionParams),
    Idle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitParams {
    pub user: String,
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expire_time: Option<Tick>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expire_block: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends_on: Vec<String>,
    /// Nodes the client reaches; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeleteParams {
    pub user: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cosigners: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeId>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultMode {
    /// Adds a fabricated entry to the node's next summary block.
    SummaryInject,
    /// Alters a carried entry in the node's next summary block.
    SummaryAlter,
    /// Votes no on every ballot from now on.
    Contrarian,
    /// Slips a forged entry into every block it proposes.
    MaliciousProposer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptParams {
    pub node: NodeId,
    pub mode: FaultMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionParams {
    /// Disjoint node groups covering all nodes; empty heals the network.
    pub groups: Vec<Vec<NodeId>>,
}

pub fn parse_script(yaml: &str) -> Result<Vec<ScenarioEvent>, ScriptError> {
    if yaml.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut events: Vec<ScenarioEvent> = serde_yaml::from_str(yaml).map_err(|e| ScriptError::Yaml(e.to_string()))?;
    events.sort_by_key(|e| e.at);
    Ok(events)
}

pub fn to_yaml(events: &[ScenarioEvent]) -> String {
    serde_yaml::to_string(events).expect("scenario events serialize")
}

pub(crate) fn parse_ref(at: Tick, value: &str) -> Result<EntryRef, ScriptError> {
    value.parse().map_err(|_| ScriptError::BadRef { at, value: value.to_string() })
}

/// Checks an event against the node count and the known users.
pub(crate) fn validate_event(event: &ScenarioEvent, n_nodes: usize, users: &[String]) -> Result<(), ScriptError> {
    let at = event.at;
    let known_user = |u: &str| {
        if users.iter().any(|k| k == u) {
            Ok(())
        } else {
            Err(ScriptError::UnknownUser { at, user: u.to_string() })
        }
    };
    let known_node = |n: NodeId| {
        if (n as usize) < n_nodes {
            Ok(())
        } else {
            Err(ScriptError::UnknownNode { at, node: n })
        }
    };
    match &event.action {
        Action::Submit(p) => {
            known_user(&p.user)?;
            for d in &p.depends_on {
                parse_ref(at, d)?;
            }
            p.nodes.iter().flatten().try_for_each(|n| known_node(*n))?;
        }
        Action::Delete(p) => {
            known_user(&p.user)?;
            parse_ref(at, &p.target)?;
            p.cosigners.iter().try_for_each(|c| known_user(c))?;
            p.nodes.iter().flatten().try_for_each(|n| known_node(*n))?;
        }
        Action::Corrupt(p) => known_node(p.node)?,
        Action::Partition(p) => {
            if !p.groups.is_empty() {
                let mut all: Vec<NodeId> = p.groups.iter().flatten().copied().collect();
                all.sort_unstable();
                let expected: Vec<NodeId> = (0..n_nodes as NodeId).collect();
                if all != expected || p.groups.iter().any(Vec::is_empty) {
                    return Err(ScriptError::BadPartition { at });
                }
            }
        }
        Action::Idle => {}
    }
    Ok(())
}
