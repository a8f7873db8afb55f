//! Experiment runner behind the `alphaeta` binary.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

pub use commands::Subcommand;
pub use config::ExperimentConfig;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or unwritable output (exit 2).
    Config(String),
    /// Key-size guard refused the run (exit 3).
    Guard(String),
    /// Numerical failure (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Guard(m) => write!(f, "guard violation: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<alphaeta::Error> for CliError {
    fn from(e: alphaeta::Error) -> Self {
        match e {
            alphaeta::Error::InvalidArgument(m) => CliError::Config(m),
            alphaeta::Error::Guard(m) => CliError::Guard(m),
            alphaeta::Error::Numerical(m) => CliError::Numerical(m),
        }
    }
}
