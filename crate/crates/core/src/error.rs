use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cumulant order {0} is not supported (expected 2..=6)")]
    UnsupportedOrder(usize),

    #[error("missing cumulant of order {0}")]
    MissingOrder(usize),

    #[error("no condition available for p = {p}, l = {l}: {reason}")]
    Unsupported { p: usize, l: usize, reason: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bootstrap resample {index} failed: {source}")]
    Resample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
