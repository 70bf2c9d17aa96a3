//! Library side of the `obmo` command-line tool: config resolution, error
//! and exit-status mapping, and the dataset-scale commands.

pub mod commands;
pub mod config;
pub mod error;

pub use error::{exit, CliError};
