use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("empty domain")]
    EmptyDomain,
    #[error("vertex ({0}, {1}) is not in the domain")]
    OutsideDomain(i64, i64),
    #[error("inner set is not contained in the outer domain")]
    Containment,
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("factorization failure: {0}")]
    Factorization(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("pattern not found: {0}")]
    PatternNotFound(String),
    #[error("network is disconnected between the terminals")]
    Disconnected,
    #[error("validation failure: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
