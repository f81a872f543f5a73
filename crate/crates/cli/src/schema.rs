//! Payload schemas. Schemas are JSON Schema documents written in YAML;
//! payloads are YAML too and are stored as compact JSON with sorted keys.

use std::collections::BTreeMap;
use std::path::Path;

use jsonschema::Validator;
use serde_json::Value;

use crate::error::CliError;

pub struct EntrySchema {
    document: Value,
    validator: Validator,
}

impl EntrySchema {
    pub fn from_value(document: Value) -> Result<Self, CliError> {
        let validator =
            jsonschema::validator_for(&document).map_err(|e| CliError::validation("bad-schema", e.to_string()))?;
        Ok(EntrySchema { document, validator })
    }

    pub fn from_yaml(text: &str) -> Result<Self, CliError> {
        let document: Value =
            serde_yaml::from_str(text).map_err(|e| CliError::validation("bad-schema", e.to_string()))?;
        Self::from_value(document)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Self::from_yaml(&text)
    }

    pub fn document(&self) -> &Value {
        &self.document
    }

    /// Every violation, one message each. Empty when the payload conforms.
    pub fn violations(&self, payload: &Value) -> Vec<String> {
        self.validator
            .iter_errors(payload)
            .map(|e| {
                let path = e.instance_path().to_string();
                if path.is_empty() {
                    e.to_string()
                } else {
                    format!("{path}: {e}")
                }
            })
            .collect()
    }

    pub fn check(&self, payload: &Value) -> Result<(), CliError> {
        let violations = self.violations(payload);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::validation("schema-violation", violations.join("; ")))
        }
    }
}

pub fn parse_payload(text: &str) -> Result<Value, CliError> {
    serde_yaml::from_str(text).map_err(|e| CliError::validation("bad-payload", e.to_string()))
}

/// Compact JSON with object keys in sorted order, whatever order they were
/// written in.
pub fn canonical_json(value: &Value) -> String {
    fn sorted(value: &Value) -> Value {
        match value {
            Value::Object(map) => {
                let ordered: BTreeMap<&String, Value> = map.iter().map(|(k, v)| (k, sorted(v))).collect();
                Value::Object(ordered.into_iter().map(|(k, v)| (k.clone(), v)).collect())
            }
            Value::Array(items) => Value::Array(items.iter().map(sorted).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sorted(value)).expect("JSON values serialize")
}
