//! Crate-wide error type with a stable mapping onto CLI exit codes.

use thiserror::Error;

/// Best estimate carried out of a failed power iteration.
#[derive(Debug, Clone)]
pub struct ConvergenceFailure {
    pub sigma1_estimate: f64,
    pub iterations: usize,
    pub last_relative_change: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on inputs was violated (bad dimensions, out-of-range
    /// index, non-positive quantity, inconsistent shapes).
    #[error("invalid input: {0}")]
    Validation(String),

    /// Iterative solver ran out of iterations; carries the best estimate.
    #[error("no convergence after {} iterations (sigma1 estimate {}, last relative change {:.3e})",
            .0.iterations, .0.sigma1_estimate, .0.last_relative_change)]
    Convergence(ConvergenceFailure),

    /// A data file could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Run configuration is missing, unreadable, or semantically invalid.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 1 runtime/convergence, 2 usage/config,
    /// 3 parse.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Config(_) => 2,
            Error::Parse { .. } => 3,
            Error::Convergence(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
