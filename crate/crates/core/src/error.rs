use std::path::PathBuf;

/// Errors produced by dataset handling, graph construction, and search.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A file did not match its expected binary layout.
    #[error("{path}: {detail} (byte offset {offset})")]
    Format {
        path: PathBuf,
        offset: u64,
        detail: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("id {id} out of range for {len} items")]
    InvalidId { id: u32, len: usize },

    /// Angular similarity is undefined for zero-norm vectors.
    #[error("zero-norm operand under angular similarity: {0}")]
    ZeroNorm(String),

    #[error("checksum mismatch: {0}")]
    ChecksumMismatch(String),
}

impl Error {
    /// Coarse category used by the CLI for error reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Format { .. } => "format",
            Error::InvalidParameter(_) => "config",
            Error::DimensionMismatch { .. }
            | Error::InvalidId { .. }
            | Error::ZeroNorm(_)
            | Error::ChecksumMismatch(_) => "data",
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, offset: u64, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
