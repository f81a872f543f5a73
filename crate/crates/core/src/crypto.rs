//! SHA-256 digests and Ed25519 keys/signatures.

use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use crate::error::KeyError;

/// A 32-byte SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn of(data: &[u8]) -> Self {
        Digest(Sha256::digest(data).into())
    }

    /// Hash of several byte slices fed in order.
    pub fn of_parts(parts: &[&[u8]]) -> Self {
        let mut hasher = Sha256::new();
        for part in parts {
            hasher.update(part);
        }
        Digest(hasher.finalize().into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// First five lowercase hex digits, the console display form.
    pub fn short(&self) -> String {
        self.to_hex()[..5].to_string()
    }

    pub fn from_hex(s: &str) -> Result<Self, KeyError> {
        Ok(Digest(decode_fixed::<32>(s)?))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.short())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

const VERIFIED_CAPACITY: usize = 1 << 16;

thread_local! {
    static VERIFIED: RefCell<HashSet<Digest>> = RefCell::new(HashSet::new());
}

/// An Ed25519 verifying key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey(pub [u8; 32]);

impl PublicKey {
    /// Successful checks are remembered per thread, so entries carried
    /// from summary to summary are not verified again on every pass.
    pub fn verify(&self, message: &[u8], signature: &Signature) -> bool {
        let id = Digest::of_parts(&[&self.0, &signature.0, message]);
        if VERIFIED.with(|v| v.borrow().contains(&id)) {
            return true;
        }
        let Ok(key) = VerifyingKey::from_bytes(&self.0) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
        let ok = key.verify(message, &sig).is_ok();
        if ok {
            VERIFIED.with(|v| {
                let mut v = v.borrow_mut();
                if v.len() >= VERIFIED_CAPACITY {
                    v.clear();
                }
                v.insert(id);
            });
        }
        ok
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, KeyError> {
        let bytes = decode_fixed::<32>(s)?;
        VerifyingKey::from_bytes(&bytes).map_err(|_| KeyError::InvalidPublicKey)?;
        Ok(PublicKey(bytes))
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", &self.to_hex()[..10])
    }
}

/// A 64-byte Ed25519 signature.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; 64]);

impl Signature {
    /// Placeholder used before signing; never verifies.
    pub const EMPTY: Signature = Signature([0u8; 64]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        self.to_hex()[..5].to_string()
    }

    pub fn from_hex(s: &str) -> Result<Self, KeyError> {
        Ok(Signature(decode_fixed::<64>(s)?))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", &self.to_hex()[..10])
    }
}

/// An Ed25519 signing key together with its public half.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    pub fn from_secret(secret: [u8; 32]) -> Self {
        KeyPair { signing: SigningKey::from_bytes(&secret) }
    }

    /// Deterministic key for `label` under `seed`. Scenario runs and golden
    /// fixtures use this so that every signature is reproducible.
    pub fn derive(label: &str, seed: u64) -> Self {
        let secret = Digest::of_parts(&[b"prunechain/key/v1", &seed.to_be_bytes(), label.as_bytes()]);
        Self::from_secret(secret.0)
    }

    pub fn public(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public()).finish_non_exhaustive()
    }
}

fn decode_fixed<const N: usize>(s: &str) -> Result<[u8; N], KeyError> {
    let bytes = hex::decode(s).map_err(|_| KeyError::InvalidHex)?;
    bytes.try_into().map_err(|v: Vec<u8>| KeyError::WrongLength { expected: N, actual: v.len() })
}

macro_rules! hex_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                <$ty>::from_hex(&s).map_err(de::Error::custom)
            }
        }
    };
}

hex_serde!(Digest);
hex_serde!(PublicKey);
hex_serde!(Signature);
