use thiserror::Error;

/// Crate-wide error type. Variants map onto the failure classes the public
/// APIs can hit: bad configuration, shape mismatches, numeric blow-ups,
/// violated call contracts, a not-yet-ready replay buffer, corrupt files,
/// and plain I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("not ready: {0}")]
    NotReady(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
