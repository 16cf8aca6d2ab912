use thiserror::Error;

/// Errors shared across the crate.
///
/// `NotDecodable` is deliberately *not* an error: an erasure pattern that
/// admits several codeword completions is a legitimate decoder outcome (see
/// [`crate::f2core::DecodeOutcome`]). `Corruption` is different — it means the
/// word disagrees with every codeword on its known positions, which cannot be
/// produced by erasures alone.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("corrupt word: {0}")]
    Corruption(String),

    #[error("locality contradiction: {0}")]
    Contradiction(String),

    #[error("compilation failed: {0}")]
    Compile(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
