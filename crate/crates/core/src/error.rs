use thiserror::Error;

/// Errors raised by the simulator, its oracles and the certification layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gossip schedule needs a window of at least n-1 = {required} steps, got {window}")]
    InfeasibleWindow { window: usize, required: usize },

    #[error("conjugate oracle did not converge after {iterations} iterations (gradient-map residual {residual:e})")]
    OracleFailure { residual: f64, iterations: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("intersection of the local boxes is empty")]
    InfeasibleInstance,

    #[error("certification unavailable: {0}")]
    CertificationUnavailable(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
