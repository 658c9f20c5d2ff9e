//! Front end for the `memcell` binary: configuration parsing, command
//! dispatch, CSV artifacts and run manifests.

pub mod commands;
pub mod config;
pub mod manifest;

use std::fmt;
use std::io;
use std::path::PathBuf;

pub use commands::{run, Cli, Command};
pub use config::{parse_config_str, render_config, ConfigError};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config { path: PathBuf, source: ConfigError },
    Io { path: PathBuf, source: io::Error },
    Sim(memcell::Error),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for simulation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(e) if !is_input_error(e) => 2,
            _ => 1,
        }
    }
}

fn is_input_error(e: &memcell::Error) -> bool {
    matches!(
        e,
        memcell::Error::Config(_) | memcell::Error::Pattern(_) | memcell::Error::Topology(_)
    )
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Config { path, source } => {
                write!(f, "config: {}: {source}", path.display())
            }
            CliError::Io { path, source } => write!(f, "io: {}: {source}", path.display()),
            CliError::Sim(e) => write!(f, "{}: {e}", e.module()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<memcell::Error> for CliError {
    fn from(e: memcell::Error) -> Self {
        CliError::Sim(e)
    }
}
