use thiserror::Error;

/// Errors produced by grid construction, scheme assembly and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value at node ({j}, {m})")]
    NonFinite { j: usize, m: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("fixed-point iteration not admissible: deviation bound {bound:.3e} >= threshold {threshold:.3e}")]
    NotContractive { bound: f64, threshold: f64 },
    #[error("fixed-point iteration stopped after {iterations} iterations with residual {residual:.3e}")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("banded system is singular: pivot {pivot:.3e} at row {row}")]
    Singular { row: usize, pivot: f64 },
    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualNotCertified { residual: f64, tolerance: f64 },
    #[error("blow-up guard tripped: norm {norm:.3e} exceeds limit {limit:.3e}")]
    Blowup { norm: f64, limit: f64 },
    #[error("exact snapshot {n} has zero norm")]
    DivisionByZero { n: usize },
    #[error("step {n} failed: {source}")]
    Step {
        n: usize,
        #[source]
        source: Box<NlsError>,
    },
}

impl NlsError {
    /// The underlying error once any per-step wrapping is removed.
    pub fn root(&self) -> &NlsError {
        match self {
            NlsError::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, NlsError>;
