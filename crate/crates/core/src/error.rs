use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("class `{class}` has {count} member(s), at least {required} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("unknown label `{label}` ({context})")]
    UnknownLabel { label: String, context: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("missing prediction for id `{0}`")]
    MissingPrediction(String),

    #[error("invalid annotation, field `{field}`: {message}")]
    Validation { field: &'static str, message: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable kind, used by the CLI's `--json` errors and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::InvalidInput(_) => "invalid_input",
            Error::ClassTooSmall { .. } => "class_too_small",
            Error::UnknownLabel { .. } => "unknown_label",
            Error::DuplicateId(_) => "duplicate_id",
            Error::MissingPrediction(_) => "missing_prediction",
            Error::Validation { .. } => "validation",
            Error::NotFound(_) => "not_found",
            Error::Degenerate(_) => "degenerate",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
