use std::path::PathBuf;

use thiserror::Error;

use crate::formats::{CooOrdering, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("dense oracle refuses n = {n}: the cap is {cap}")]
    OracleCap { n: usize, cap: usize },

    #[error("ELL footprint estimate of {estimate} bytes exceeds the limit of {limit} bytes")]
    EllTooLarge { estimate: u64, limit: u64 },

    /// Indices are 1-based.
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("dimension mismatch: expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("kernel {kernel} requires {expected} COO ordering, got {found}")]
    WrongOrdering {
        kernel: &'static str,
        expected: CooOrdering,
        found: CooOrdering,
    },

    #[error("lane count must be at least 1")]
    ZeroLanes,

    #[error("row statistics are undefined for a matrix with no stored entries")]
    EmptyMatrix,

    #[error("timing {name} must be strictly positive, got {value}")]
    NonPositiveTiming { name: &'static str, value: f64 },

    #[error("repeat count must be at least 1")]
    ZeroRepeats,

    #[error("kernel {kernel} cannot run on a {format} matrix")]
    KernelFormatMismatch {
        kernel: &'static str,
        format: &'static str,
    },

    #[error("the benchmark matrix set is empty")]
    EmptyMatrixSet,

    #[error("threshold constant c must be positive and finite, got {0}")]
    BadThresholdConstant(f64),

    #[error("{}:{line}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid generator parameters: {0}")]
    Generator(String),

    #[error(
        "D_mat target {target} is infeasible for n = {n}, mean degree {mean_deg}: \
         feasible targets lie in [0, {max:.4}]"
    )]
    InfeasibleTarget {
        target: f64,
        n: usize,
        mean_deg: usize,
        max: f64,
    },

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
