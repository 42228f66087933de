use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched feature spaces, bad scaling depth, invalid hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller supplied data that violates an operation's precondition.
    #[error("input error: {0}")]
    Input(String),

    /// A tree whose structure or paths violate the data model.
    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    /// Metric is undefined on the supplied data (e.g. single-class holdout).
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("ingestion error at row {row}, column '{column}': {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    /// An internal consistency check failed; indicates a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
