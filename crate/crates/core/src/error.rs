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

    #[error("csv: {0}")]
    Csv(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("line {line}, column '{column}': missing or non-finite value")]
    MissingValue { line: u64, column: String },

    #[error("correlation undefined: column '{column}' has zero variance")]
    UndefinedCorrelation { column: String },

    #[error("row signature mismatch: {0}")]
    Signature(String),

    #[error("cannot fit model: {0}")]
    Fit(String),

    #[error("prediction is not finite for row {row}")]
    NonFinitePrediction { row: usize },

    #[error("partial dependence: {0}")]
    PartialDependence(String),

    #[error("chunk spec: {path}: {message}")]
    ChunkSpec { path: String, message: String },

    #[error("feature construction: {0}")]
    Construction(String),

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("invalid score input: {0}")]
    ScoreInput(String),

    #[error("external model protocol error at response line {line}: {message} (got {content:?})")]
    Protocol {
        line: usize,
        content: String,
        message: String,
    },

    #[error("external model: {0}")]
    External(String),

    #[error("external model is not pure: identical batch of {rows} rows produced different scores at row {row}")]
    PurityViolation { rows: usize, row: usize },

    #[error("report: {0}")]
    Report(String),
}

impl Error {
    /// Errors caused by an external model misbehaving on the line protocol.
    pub fn is_protocol(&self) -> bool {
        matches!(
            self,
            Error::Protocol { .. } | Error::External(_) | Error::PurityViolation { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
