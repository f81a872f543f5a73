use std::fmt;
use std::process::ExitCode;

use prunechain::chainfile::ChainFileError;
use prunechain::verify::Verdict;

/// Exit status families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Io = 1,
    Validation = 2,
    Authorization = 3,
    Guard = 4,
    BrokenChain = 5,
}

/// A failure with its exit status and a short machine-readable reason.
#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub reason: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, reason: impl Into<String>, message: impl Into<String>) -> Self {
        CliError { kind, reason: reason.into(), message: message.into() }
    }

    pub fn io(message: impl fmt::Display) -> Self {
        Self::new(Kind::Io, "io", message.to_string())
    }

    pub fn validation(reason: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(Kind::Validation, reason, message)
    }

    pub fn authorization(reason: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(Kind::Authorization, reason, message)
    }

    pub fn broken(verdict: Verdict) -> Self {
        match verdict {
            Verdict::Broken { at, reason } => {
                Self::new(Kind::BrokenChain, reason.code(), format!("chain is broken at block {at}"))
            }
            Verdict::Valid => Self::new(Kind::BrokenChain, "broken-chain", "chain is broken"),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e)
    }
}

impl From<ChainFileError> for CliError {
    fn from(e: ChainFileError) -> Self {
        match e {
            ChainFileError::Io(e) => CliError::io(e),
            other => CliError::new(Kind::BrokenChain, "unreadable-chain", other.to_string()),
        }
    }
}
