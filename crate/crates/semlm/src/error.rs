use thiserror::Error;

/// Errors produced by the semlm pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A parsed document violates a schema invariant.
    #[error("line {line}: {violation}")]
    InvalidDocument { line: usize, violation: String },

    /// A caller-supplied value is out of contract.
    #[error("{0}")]
    InvalidInput(String),

    /// An operation that needs data was given none.
    #[error("empty corpus")]
    EmptyCorpus,

    /// N-gram order outside the supported 1..=3 range.
    #[error("unsupported n-gram order {0} (expected 1, 2 or 3)")]
    UnsupportedOrder(usize),

    /// A model file is malformed or has an unknown version.
    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
