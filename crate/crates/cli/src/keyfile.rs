//! Signing keys on disk: one JSON object per file.

use std::path::Path;

use prunechain::{KeyPair, PublicKey, Role};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyFile {
    pub user: String,
    pub role: Role,
    pub public: PublicKey,
    pub secret: String,
}

impl KeyFile {
    pub fn new(user: &str, role: Role, keys: &KeyPair) -> Self {
        KeyFile { user: user.to_string(), role, public: keys.public(), secret: hex::encode(keys.secret_bytes()) }
    }

    pub fn keys(&self) -> Result<KeyPair, CliError> {
        let secret: [u8; 32] = hex::decode(&self.secret).ok().and_then(|b| b.try_into().ok()).ok_or_else(|| {
            CliError::validation("bad-key", format!("key file for {} has a malformed secret", self.user))
        })?;
        let keys = KeyPair::from_secret(secret);
        if keys.public() != self.public {
            return Err(CliError::validation(
                "bad-key",
                format!("key file for {} does not match its public key", self.user),
            ));
        }
        Ok(keys)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::validation("bad-key", format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("key files serialize");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    }
}
