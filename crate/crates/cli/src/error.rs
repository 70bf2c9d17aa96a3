use std::path::PathBuf;

use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const CLEAN: i32 = 0;
    pub const WARNINGS: i32 = 1;
    /// Reserved for command-line usage errors (reported by clap).
    pub const USAGE: i32 = 2;
    pub const PATH: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const CONTRACT: i32 = 5;
    pub const CONFIG: i32 = 6;
    pub const IO: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {reason}")]
    Path { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{0}")]
    Contract(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Path { .. } => exit::PATH,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Contract(_) => exit::CONTRACT,
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

impl From<obmo_core::obmo::ConfigError> for CliError {
    fn from(e: obmo_core::obmo::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}
