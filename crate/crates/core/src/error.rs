use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading or writing a coefficient cache file.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CacheError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported declared order k={0} (expected 2 or 3)")]
    DeclaredOrder(String),
    #[error("malformed entry on line {line}: {reason}")]
    MalformedEntry { line: usize, reason: String },
    #[error("truncated entries: expected {expected}, file ended after {found}")]
    Truncated { expected: usize, found: usize },
    #[error("checksum mismatch: header implies {declared} entries, END line reports {reported}")]
    ChecksumMismatch { declared: usize, reported: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Legendre degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("coefficient tensor covers indices up to {available}, but {requested} was requested")]
    TensorTooSmall { requested: usize, available: usize },

    #[error("search for a minimal truncation exceeded the cap {cap}")]
    SearchCap { cap: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("missing bundle entries: {0}")]
    MissingBundle(String),

    #[error("spectrum is not non-increasing at index {index}")]
    NonIncreasing { index: usize },

    #[error("at least {required} paths are required, got {found}")]
    InsufficientPaths { required: usize, found: usize },

    #[error("cache {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: CacheError,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("plot: {0}")]
    Plot(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short category used by the CLI error line and the C ABI status codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_)
            | Error::DegreeCap { .. }
            | Error::NonIncreasing { .. }
            | Error::InsufficientPaths { .. } => "argument",
            Error::TensorTooSmall { .. } | Error::MissingBundle(_) | Error::Dimension { .. } => {
                "shape"
            }
            Error::SearchCap { .. } => "capacity",
            Error::Cache { .. } => "format",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Csv(_) | Error::Plot(_) => "io",
        }
    }
}
