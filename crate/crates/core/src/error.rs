use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Solver *outcomes* such as an infeasible or unbounded LP are reported through
/// status enums on the solution types; the variants below are for situations
/// where a caller asked for something the data cannot provide.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("simplex pivot magnitude {0:e} below tolerance after Bland fallback")]
    NumericDegeneracy(f64),

    #[error("iteration limit reached in {0}")]
    IterationLimit(&'static str),

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {0:e})")]
    NotSpd(f64),

    #[error("constraint system is infeasible")]
    Infeasible,

    #[error("lower-level problem is unbounded at the given parameter")]
    LowerLevelUnbounded,

    #[error("lower-level problem is infeasible at the given parameter")]
    Domain,

    #[error("point violates the constraint system by {0:e}")]
    InfeasiblePoint(f64),

    #[error("starting point violates the constraint system by {0:e}")]
    InfeasibleStart(f64),

    #[error("dual polyhedron {{u >= 0 : B^T u = -c}} is empty")]
    DualInfeasible,

    #[error("complementarity pair {index} is infeasible: G = {g}, H = {h}")]
    InfeasibleComplementarity { index: usize, g: f64, h: f64 },

    #[error("instance has an empty feasible set")]
    InfeasibleInstance,

    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },

    #[error("benchmark table is empty")]
    EmptyTable,

    #[error("run failed at outer iteration {outer} (sigma = {sigma}): {source}")]
    Run {
        outer: usize,
        sigma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
