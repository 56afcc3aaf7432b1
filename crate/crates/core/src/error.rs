use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix that had to be symmetric positive definite was not.
    #[error("decomposition failed: {0} is not symmetric positive definite")]
    Decomposition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("filter underflow: all regime likelihoods vanish at t = {t}")]
    Underflow { t: usize },

    #[error("non-finite state in block `{block}` at sweep {sweep}")]
    NonFinite { block: String, sweep: usize },

    #[error("explosive path: |y| exceeded 1e10 at t = {t}")]
    Explosive { t: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
