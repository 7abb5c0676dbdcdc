use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("keys are not sorted at position {position}")]
    Unsorted { position: usize },

    #[error("non-finite coordinate at point {point}, dimension {dim}")]
    NonFinite { point: usize, dim: usize },

    #[error("coordinate {value} does not fit in {bits} bits")]
    CoordinateOverflow { value: u64, bits: u32 },

    #[error("format error: {0}")]
    Format(String),

    #[error("verification failed for index {index} on query {query}: expected {expected} results, got {actual}")]
    Verification {
        index: String,
        query: usize,
        expected: usize,
        actual: usize,
    },

    #[error("{index}: {source}")]
    Build {
        index: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
