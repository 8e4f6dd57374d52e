//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate centers: {0}")]
    DegenerateCenters(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("missing pair geometry for clusters ({i}, {j})")]
    MissingPairGeometry { i: usize, j: usize },

    #[error("k = {k} exceeds the number of points n = {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("outlier fraction eta = {eta} must be below the minimum cluster weight {w_min}")]
    EtaTooLarge { eta: f64, w_min: f64 },

    #[error("only {found} components available, {k} required")]
    Insufficient { found: usize, k: usize },

    #[error("sample {0} is the zero vector")]
    ZeroVectorSample(usize),

    #[error("points {a} and {b} coincide")]
    CoincidentPair { a: usize, b: usize },

    #[error("optimal clustering is not unique (runner-up cost {runner_up} vs optimum {optimum})")]
    NotUnique { optimum: f64, runner_up: f64 },

    #[error("infeasible generator request: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse { path: PathBuf, row: usize, column: usize, message: String },

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch { what: &'static str, expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },

    #[error("instance carries no ground-truth labels")]
    MissingLabels,

    #[error("size mismatch: {left} vs {right} points")]
    SizeMismatch { left: usize, right: usize },

    #[error("missing dataset files: {}", .0.join(", "))]
    MissingDataset(Vec<String>),

    #[error("unknown property suite '{0}'")]
    UnknownSuite(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
