//! Command-line front end: argument parsing, experiment dispatch and
//! CSV/JSON emitters.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod format;

pub use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] longmem_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 1 for usage errors, 2 for numerical and I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_usage() => 1,
            _ => 2,
        }
    }
}

/// Runs a parsed command.
pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::ReproduceTables(a) => commands::reproduce_tables(a),
        Command::Diagnostics(a) => commands::diagnostics(a),
        Command::ScalingStudy(a) => commands::scaling_study(a),
    }
}
