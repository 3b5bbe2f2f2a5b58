use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported polynomial or quadrature degree {0}")]
    UnsupportedDegree(usize),
    #[error("meshes do not belong to the same refinement forest")]
    IncompatibleHierarchy,
    #[error("point ({0}, {1}) lies outside the domain")]
    PointOutsideDomain(f64, f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not flagged symmetric")]
    NotSymmetric,
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("indicator records incomplete: expected {expected}, got {got}")]
    IncompleteRecords { expected: usize, got: usize },
    #[error("solution history incomplete: requested step {requested}, have {available}")]
    IncompleteHistory { requested: usize, available: usize },
    #[error("non-positive input to EOC computation")]
    NonPositiveInput,
    #[error("estimator sum is zero")]
    ZeroEstimator,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mesh format error: {0}")]
    MeshFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
