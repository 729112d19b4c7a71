use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported {what}: {value}")]
    Unsupported { what: &'static str, value: u32 },

    #[error("payload mismatch: expected {expected} bytes, found {found}")]
    PayloadMismatch { expected: usize, found: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty map")]
    EmptyMap,

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidValue(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
