//! Crate-wide error type with exit-status classes for the CLI.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column: {0}")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("{0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dataset is empty after cleaning")]
    EmptyDataset,
    #[error("insufficient data: need at least {required} rows, got {got}")]
    InsufficientData { required: usize, got: usize },
    #[error("constant feature cannot be standardized")]
    DegenerateFeature,
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("training diverged: loss became non-finite at step {0}")]
    Divergence(usize),
    #[error("line search stalled after {0} consecutive step halvings")]
    Stagnation(usize),
    #[error("window sweep produced no result: {0}")]
    Sweep(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit-status class: 2 for config errors, 3 for data errors, 4 otherwise.
    /// A missing column is a config error: the configured column map does
    /// not match the file.
    pub fn exit_class(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::MissingColumn(_) => 2,
            Error::Row { .. }
            | Error::Domain(_)
            | Error::Shape(_)
            | Error::EmptyDataset
            | Error::InsufficientData { .. }
            | Error::DegenerateFeature
            | Error::DegenerateLabels
            | Error::Csv(_) => 3,
            _ => 4,
        }
    }
}
