use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("cluster {0} has no members")]
    EmptyCluster(usize),

    #[error("label {label} out of range for {k} clusters")]
    LabelOutOfRange { label: usize, k: usize },

    /// `(V)+` vanished, so the projection onto the feasible set is undefined.
    #[error("degenerate projection: positive part of the input is zero")]
    DegenerateProjection,

    #[error("solver aborted: {0}")]
    SolverAborted(String),

    #[error("parse error in {path} at line {line}, column {col}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        col: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_mismatch(expected: impl Into<String>, got: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        expected: expected.into(),
        got: got.into(),
    }
}
