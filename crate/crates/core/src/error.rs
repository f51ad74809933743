use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown table format `{0}` (expected csv, uci-adult or uci-german)")]
    UnknownFormat(String),

    #[error("unknown builtin id `{0}`")]
    UnknownBuiltin(String),

    #[error("no data rows")]
    NoDataRows,

    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("column `{0}` is not present in the table")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error(
        "row {row}, column `{column}`: value `{value}` was not seen when the encoder was fitted"
    )]
    UnseenCategory {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{rows} rows cannot be split into {folds} folds; reduce the fold count")]
    TooFewRows { rows: usize, folds: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("audit aborted: {0}")]
    AuditAborted(String),

    #[error("malformed document: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
