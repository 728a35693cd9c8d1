use thiserror::Error;

/// Errors surfaced by the library, categorized for CLI exit reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("singular information matrix (determinant below guard)")]
    SingularInformation,

    #[error("infinite divergence: q has a zero cell where p is positive")]
    InfiniteDivergence,

    #[error("constraint infeasible within the parameter space: {0}")]
    InfeasibleConstraint(String),

    #[error("optimizer failed to converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("calibration failed: {failures} of {total} bootstrap fits did not converge")]
    CalibrationFailed { failures: usize, total: usize },

    #[error("experiment failed: {failures} of {total} replications did not converge")]
    ExperimentFailed { failures: usize, total: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Warning {
    /// A model cell probability was floored before raising to a negative power.
    DegenerateCell { cell: usize, prob: f64 },
    /// All devices failed in the first interval or none failed at all.
    BoundaryData,
    /// Optimizer hit the iteration cap; best point reported.
    NonConvergence,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::DegenerateCell { cell, prob } => {
                write!(f, "degenerate cell {cell}: probability {prob:.3e} floored")
            }
            Warning::BoundaryData => write!(f, "boundary data: degenerate failure pattern"),
            Warning::NonConvergence => write!(f, "optimizer did not converge"),
        }
    }
}
