use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}, {k}) out of bounds for dims ({}, {}, {})", dims.0, dims.1, dims.2)]
    OutOfBounds {
        i: usize,
        j: usize,
        k: usize,
        dims: (usize, usize, usize),
    },

    #[error("negative value {value} at ({i}, {j}, {k})")]
    NegativeValue { i: usize, j: usize, k: usize, value: f64 },

    #[error("non-finite value at ({i}, {j}, {k})")]
    NonFiniteValue { i: usize, j: usize, k: usize },

    #[error("conflicting duplicate entries at ({i}, {j}, {k}): {first} vs {second}")]
    DuplicateIndex {
        i: usize,
        j: usize,
        k: usize,
        first: f64,
        second: f64,
    },

    #[error("invalid block structure: {0}")]
    InvalidStructure(String),

    #[error("dense reconstruction of {cells} cells exceeds the limit of {limit}")]
    TooLarge { cells: usize, limit: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("update of {0} produced a non-finite value")]
    NonFinite(&'static str),

    #[error("invalid parameter coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: cannot parse record {content:?}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        content: String,
        reason: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
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
