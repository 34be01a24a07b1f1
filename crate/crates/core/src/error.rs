use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("expected point count {expected:.3e} exceeds the budget cap {cap:.3e}")]
    PointBudgetExceeded { expected: f64, cap: f64 },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("largest connected component has fewer than 2 vertices")]
    ComponentTooSmall,

    #[error("cluster has no interior vertices (domain too small for a Dirichlet problem)")]
    NoInterior,

    #[error("cluster has no boundary layer (operator would be singular)")]
    NoBoundaryLayer,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "conjugate gradient stalled at relative residual {residual:.3e} after {iterations} iterations (tol {tol:.3e})"
    )]
    SolverDiverged {
        residual: f64,
        iterations: usize,
        tol: f64,
    },

    #[error(
        "eigensolver converged {converged} of {requested} pairs in {iterations} iterations (worst residual {worst_residual:.3e})"
    )]
    EigenNotConverged {
        converged: usize,
        requested: usize,
        iterations: usize,
        worst_residual: f64,
    },

    #[error("dense eigendecomposition size {size} exceeds cap {cap}")]
    DenseCapExceeded { size: usize, cap: usize },

    #[error("point {0:?} lies outside the domain")]
    OutOfDomain(Vec<f64>),

    #[error("spectrum enumeration too shallow to certify the gap at k={k}")]
    InsufficientEnumeration { k: usize },

    #[error(
        "discrete/continuum modes nearly orthogonal at k={k} (normalization inner product {inner:.3e} below 0.1)"
    )]
    DegenerateAlignment { k: usize, inner: f64 },

    #[error("rate fit needs at least 3 distinct scales, got {0}")]
    DegenerateFit(usize),

    #[error("corrector fields missing or built on a different cluster")]
    MissingCorrectors,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed point-cloud file: {0}")]
    MalformedCloudFile(String),
}
