use thiserror::Error;

/// Errors produced by the solvers and the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("iterate blew up at t={iteration}: max |x| = {max_abs:e} exceeds {limit:e}")]
    BlowUp {
        iteration: usize,
        max_abs: f64,
        limit: f64,
    },

    #[error("degenerate calibration: ||x||_0/m = {0} >= 1")]
    DegenerateSupport(f64),

    #[error("no bracket found: {0}")]
    NoBracket(String),

    #[error("message passing diverged: {0}")]
    Divergence(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::DegenerateSupport(_)
                | Error::NoBracket(_)
                | Error::Divergence(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
