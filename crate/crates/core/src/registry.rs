//! Identity to public-key registry, including the quorum's master key.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::PublicKey;
use crate::error::RegistryError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Admin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminKey {
    pub name: String,
    pub key: PublicKey,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    #[serde(default)]
    users: BTreeMap<String, PublicKey>,
    #[serde(default)]
    admin: Option<AdminKey>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_user(&mut self, name: &str, key: PublicKey) -> Result<(), RegistryError> {
        if let Some(admin) = &self.admin {
            if admin.name == name {
                return Err(RegistryError::ReservedName(name.to_string()));
            }
            if admin.key == key {
                return Err(RegistryError::AdminKeyReused);
            }
        }
        match self.users.get(name) {
            Some(existing) if *existing != key => Err(RegistryError::AlreadyRegistered(name.to_string())),
            _ => {
                self.users.insert(name.to_string(), key);
                Ok(())
            }
        }
    }

    pub fn set_admin(&mut self, name: &str, key: PublicKey) -> Result<(), RegistryError> {
        if self.users.contains_key(name) {
            return Err(RegistryError::ReservedName(name.to_string()));
        }
        if self.users.values().any(|k| *k == key) {
            return Err(RegistryError::AdminKeyReused);
        }
        self.admin = Some(AdminKey { name: name.to_string(), key });
        Ok(())
    }

    pub fn admin(&self) -> Option<&AdminKey> {
        self.admin.as_ref()
    }

    pub fn role_of(&self, name: &str) -> Option<Role> {
        if self.admin.as_ref().is_some_and(|a| a.name == name) {
            Some(Role::Admin)
        } else if self.users.contains_key(name) {
            Some(Role::User)
        } else {
            None
        }
    }

    /// Public key of a user or of the admin identity.
    pub fn key_of(&self, name: &str) -> Option<&PublicKey> {
        match &self.admin {
            Some(a) if a.name == name => Some(&a.key),
            _ => self.users.get(name),
        }
    }

    pub fn users(&self) -> impl Iterator<Item = (&str, &PublicKey)> {
        self.users.iter().map(|(n, k)| (n.as_str(), k))
    }
}
