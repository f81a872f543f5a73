use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum KeyError {
    #[error("invalid hex string")]
    InvalidHex,
    #[error("expected {expected} bytes, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("bytes do not encode an Ed25519 public key")]
    InvalidPublicKey,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("delta_l must be at least 2, got {0}")]
    SequenceTooShort(u64),
    #[error("l_min ({l_min}) must be at least delta_l ({delta_l})")]
    MinimumBelowSequence { l_min: u64, delta_l: u64 },
    #[error("l_max ({l_max}) leaves no prunable sequence above l_min ({l_min}) with delta_l {delta_l}")]
    NoPrunableSequence { l_max: u64, l_min: u64, delta_l: u64 },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("user {0:?} is already registered with a different key")]
    AlreadyRegistered(String),
    #[error("the administrative key must differ from every user key")]
    AdminKeyReused,
    #[error("identity {0:?} is reserved for the quorum")]
    ReservedName(String),
}
