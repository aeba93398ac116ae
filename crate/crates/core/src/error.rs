use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or input data.
    Data,
    /// The evolutionary run could not proceed.
    Evolution,
    /// Writing results failed.
    Output,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: line {line}: malformed row: {message}", path.display())]
    MalformedRow { path: PathBuf, line: u64, message: String },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("unknown category {code:?} for attribute {attribute:?}")]
    UnknownCategory { attribute: String, code: String },

    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),

    #[error("{}: line {line}: negative count {count}", path.display())]
    NegativeCount { path: PathBuf, line: u64, count: i64 },

    #[error("table {0:?} has no positive cell")]
    NoPositiveCell(String),

    #[error("attribute {attribute:?} is not an axis of table {table:?}")]
    NotAnAxis { table: String, attribute: String },

    #[error("frequency vector for {0:?} sums to zero")]
    ZeroVector(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("roster slot {slot}: no valid entity after {retries} retries")]
    RetriesExhausted { slot: usize, retries: usize },

    #[error("malformed composition token {0:?}")]
    MalformedComposition(String),

    #[error("unknown class letter {0:?} in composition code")]
    UnknownClassLetter(char),

    #[error("empty composition code")]
    EmptyComposition,

    #[error("age category {0:?} has no age-class grouping")]
    UnmappedAgeBin(String),

    #[error("archive is empty")]
    EmptyArchive,

    #[error("selection weights are all zero")]
    ZeroWeights,

    #[error("dataset validation failed in strict mode: {0}")]
    StrictValidation(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Output { .. } => ErrorKind::Output,
            Error::RetriesExhausted { .. } => ErrorKind::Evolution,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn input(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Input {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Output {
            path: path.into(),
            source,
        }
    }
}
