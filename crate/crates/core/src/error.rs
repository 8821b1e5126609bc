use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("coefficient function must be positive on the grid (minimum {min:e})")]
    InvalidCoefficient { min: f64 },

    #[error("unsupported source: {0}")]
    UnsupportedSource(String),

    #[error("matrix order {order} exceeds the dense limit {cap}; reduce N or the dimension")]
    SizeCap { order: usize, cap: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("time step {step} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        step: usize,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
