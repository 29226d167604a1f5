use std::path::PathBuf;

use thiserror::Error;

/// Failures raised while reading a delimited spectra file.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("file has no header row")]
    MissingHeader,
    #[error("file has no data rows")]
    NoRows,
    #[error("header has no wavenumber columns")]
    NoWavenumbers,
    #[error("wavenumber axis is not strictly increasing at column {column} ({previous} then {value})")]
    NonMonotonicAxis { column: usize, previous: f64, value: f64 },
    #[error("line {line}: expected {expected} cells, found {found}")]
    RowWidthMismatch { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column}: non-numeric cell {value:?}")]
    NonNumericCell { line: u64, column: usize, value: String },
    #[error("line {line}: missing response value")]
    MissingResponse { line: u64 },
    #[error("required column {0:?} not found in header")]
    MissingColumn(String),
    #[error("header column {0:?} is neither a wavenumber nor a known meta column")]
    UnknownColumn(String),
    #[error("line {line}: batch label {value:?} is not `old` or `new`")]
    InvalidBatch { line: u64, value: String },
    #[error("line {line}: expert wavenumber {value:?} is not a finite number")]
    InvalidExpertLine { line: usize, value: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("linear system is singular or not positive definite")]
    Singular,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
