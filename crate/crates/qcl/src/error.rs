use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum QclError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),
    #[error("eigenvalue clustering ambiguity: {0}")]
    EigenClustering(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QclError>;
