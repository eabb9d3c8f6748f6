use std::io;

use thiserror::Error;

/// Errors raised anywhere in the simulation stack.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition (non-Hermitian matrix,
    /// wrong state kind, out-of-range site, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// A numerical routine failed or produced a result outside tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The integrator step is too coarse for the requested accuracy.
    #[error("time step too large: half-step discrepancy {discrepancy:.3e} exceeds {tolerance:.1e}; reduce dt")]
    StepTooLarge { discrepancy: f64, tolerance: f64 },

    #[error("cannot sample zero shots")]
    EmptySample,

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Scenario configuration problem, tagged with the offending field path.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
