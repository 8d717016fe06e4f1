//! Error types shared across the simulator.

use thiserror::Error;

/// Errors raised while loading data or validating configuration.
#[derive(Debug, Error)]
pub enum SimError {
    /// Malformed input data, with the 1-based line number of the offender.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A configuration value violates an operation's contract.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        SimError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
