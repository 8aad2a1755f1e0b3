//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("column index {index} out of range for {d} columns")]
    ColumnOutOfRange { index: usize, d: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("multiplier {lambda:?} lies outside the convexity domain {domain}")]
    OutsideDomain { lambda: Vec<f64>, domain: String },

    #[error("target not attainable: {0}")]
    NotAttainable(String),

    #[error("dual ascent pinned at the domain boundary (residual {residual:e})")]
    DomainHit { residual: f64 },

    #[error("no convergence after {iterations} iterations (residual/gradient norm {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("disparate impact undefined: the reference group has no positive decision")]
    DisparateImpactUndefined,

    #[error("model error: {0}")]
    Model(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
