use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rejection sampling exceeded {attempts} attempts for {n} points (malformed density?)")]
    SamplingFailed { attempts: u64, n: usize },

    #[error("node {0} has zero degree; the random-walk Laplacian is undefined there")]
    IsolatedNode(usize),

    #[error("eigensolver did not converge after {iterations} Lanczos steps (worst residual {worst_residual:.3e}, target {target:.3e})")]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
        target: f64,
        residuals: Vec<f64>,
    },

    #[error("Krylov exponential failed: {0}")]
    KrylovFailure(String),

    #[error("truncation needs {needed} eigenpairs but only {available} are available")]
    TruncationTooShort { needed: usize, available: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("thresholding energy requires values in [0,1], got {value} at node {node}")]
    OutOfUnitInterval { node: usize, value: f64 },

    #[error("time {t} outside trace range [0, {end})")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("parameters (k={k}, s={s}, q={q}) are not admissible: {reason}")]
    Inadmissible {
        k: usize,
        s: f64,
        q: f64,
        reason: String,
    },

    #[error("quadrature grid too coarse: cell {cell:.3e} exceeds {limit:.3e}; use at least {suggested_n} cells per side")]
    GridTooCoarse {
        cell: f64,
        limit: f64,
        suggested_n: usize,
    },

    #[error("spectrum cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("spectrum cache {path}: checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum {
        path: PathBuf,
        stored: u32,
        computed: u32,
    },

    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
