use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the link-level library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Gray label {0}, expected 0..=3")]
    InvalidLabel(u8),

    #[error("NaN entry at index {0}")]
    NotANumber(usize),

    #[error("entry {index} ({value}) lies outside the QPSK box")]
    OutsideBox { index: usize, value: String },

    #[error("empty symbol vector")]
    EmptyVector,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lookup table size 4^{mk} exceeds the cap 4^{cap} (MK <= {cap})")]
    TableTooLarge { mk: usize, cap: usize },

    #[error("subset size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("duplicate vector with decimal value {0} in codebook set")]
    DuplicateVector(usize),

    #[error("input vector with decimal value {0} is not in the selected subset")]
    NotSelected(usize),

    #[error("LDPC construction failed: {0}")]
    Construction(String),

    #[error("alist parse error at line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
