use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChoquardError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("negative potential value {value} at node {node}")]
    NegativePotential { node: usize, value: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ChoquardError>;

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ChoquardError::Parameter(msg.into()))
}
