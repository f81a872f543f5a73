//! A chain file with its lock and session sidecar.
//!
//! `<chain>.lock` is held for the lifetime of a [`Store`]. The logical clock
//! and the entries waiting for the next block live in
//! `<chain>.session.json` next to the chain file.

use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};

use prunechain::model::Tick;
use prunechain::{chainfile, verify_chain, Chain, Entry};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub clock: Tick,
    #[serde(default)]
    pub mempool: Vec<Entry>,
    /// Payload schema fixed at init, as a JSON value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<Value>,
}

#[derive(Debug)]
struct Lock {
    path: PathBuf,
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug)]
pub struct Store {
    chain_path: PathBuf,
    _lock: Lock,
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name: OsString = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

impl Store {
    pub fn open(chain_path: &Path) -> Result<Self, CliError> {
        let lock_path = sibling(chain_path, ".lock");
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(CliError::new(
                    crate::error::Kind::Io,
                    "locked",
                    format!("{} is held by another invocation", lock_path.display()),
                ));
            }
            Err(e) => return Err(CliError::io(format!("{}: {e}", lock_path.display()))),
        }
        Ok(Store { chain_path: chain_path.to_path_buf(), _lock: Lock { path: lock_path } })
    }

    pub fn chain_path(&self) -> &Path {
        &self.chain_path
    }

    pub fn session_path(&self) -> PathBuf {
        sibling(&self.chain_path, ".session.json")
    }

    pub fn exists(&self) -> bool {
        self.chain_path.exists()
    }

    pub fn load_chain(&self) -> Result<Chain, CliError> {
        let file = File::open(&self.chain_path).map_err(|e| {
            if e.kind() == ErrorKind::NotFound {
                CliError::validation(
                    "no-chain",
                    format!("{} does not exist; run init first", self.chain_path.display()),
                )
            } else {
                CliError::io(format!("{}: {e}", self.chain_path.display()))
            }
        })?;
        Ok(chainfile::read_chain(BufReader::new(file))?)
    }

    /// Loads the chain and refuses it unless it verifies.
    pub fn load_verified(&self) -> Result<Chain, CliError> {
        let chain = self.load_chain()?;
        match verify_chain(&chain) {
            v if v.is_valid() => Ok(chain),
            v => Err(CliError::broken(v)),
        }
    }

    pub fn save_chain(&self, chain: &Chain) -> Result<(), CliError> {
        write_atomically(&self.chain_path, chainfile::to_string(chain).as_bytes())
    }

    pub fn load_session(&self, chain: &Chain) -> Result<Session, CliError> {
        let path = self.session_path();
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| CliError::validation("bad-session", format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == ErrorKind::NotFound => {
                Ok(Session { clock: chain.head().timestamp, ..Session::default() })
            }
            Err(e) => Err(CliError::io(format!("{}: {e}", path.display()))),
        }
    }

    pub fn save_session(&self, session: &Session) -> Result<(), CliError> {
        let mut text = serde_json::to_vec_pretty(session).expect("sessions serialize");
        text.push(b'\n');
        write_atomically(&self.session_path(), &text)
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = sibling(path, ".tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
