use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: expected {expected} fields, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    ParseNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: binary value must be 0 or 1, found `{value}`")]
    NotBinary {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("target column `{0}` not found in header")]
    UnknownTarget(String),

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("point does not match the schema: {0}")]
    SchemaMismatch(String),

    #[error("feature `{feature}` has no category `{label}` in the dataset")]
    UnseenLabel { feature: String, label: String },

    #[error("row index {index} out of range (dataset has {rows} rows)")]
    RowOutOfRange { index: usize, rows: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all columns removed by the collinearity filter: {0:?}")]
    AllColumnsRemoved(Vec<String>),

    #[error("coordinate descent did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("no candidate within epsilon {epsilon} of reference value {reference}; try a larger epsilon (e.g. {suggested})")]
    NoCandidates {
        reference: f64,
        epsilon: f64,
        suggested: f64,
    },

    #[error("reference reachable without change is inconsistent: every candidate yields an empty change set")]
    NoChangeNeeded,
}
