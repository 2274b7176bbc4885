//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    PowerIterationDiverged {
        iterations: usize,
        last_estimate: f64,
    },

    #[error("unit-modulus constraint violated by {max_deviation:.3e} (tolerance {tolerance:.1e})")]
    ConstraintViolation { max_deviation: f64, tolerance: f64 },

    #[error("non-finite value at iteration {iteration}: {context}")]
    NonFinite { iteration: usize, context: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numeric failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidInput(_) => 2,
            Error::NonFinite { .. }
            | Error::PowerIterationDiverged { .. }
            | Error::ConstraintViolation { .. } => 3,
            _ => 1,
        }
    }
}
