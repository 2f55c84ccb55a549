use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("decreasing timestamp at line {line}: {current} follows {previous} (line {previous_line})")]
    DecreasingTimestamp {
        line: u64,
        previous_line: u64,
        previous: f64,
        current: f64,
    },

    #[error("invalid packet at index {index}: {reason}")]
    InvalidPacket { index: usize, reason: String },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("window [{start}, {start}+{len}) exceeds trace of {available} packets")]
    WindowOutOfRange {
        start: usize,
        len: usize,
        available: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
