use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {dim} out of range (limit {limit})")]
    DimensionOutOfRange { dim: u64, limit: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "bad magic: expected {:?}, found {:?}",
        String::from_utf8_lossy(.expected),
        String::from_utf8_lossy(.found)
    )]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported {format} version {found} (expected {expected})")]
    VersionMismatch {
        format: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("truncated input while reading {0}")]
    Truncated(&'static str),

    #[error("corrupt {format} data: {reason}")]
    Corrupt {
        format: &'static str,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("covariance matrix is singular (smallest eigenvalue {0:e})")]
    SingularCovariance(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
