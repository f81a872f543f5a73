//! The `prunechain` command-line tool.
//!
//! Every invocation locks one chain file, applies one command and writes
//! the result back. Blocks are only produced by `tick`.

pub mod args;
pub mod commands;
pub mod error;
pub mod keyfile;
pub mod schema;
pub mod store;

pub use args::{Cli, Command};
pub use commands::run;
pub use error::{CliError, Kind};
