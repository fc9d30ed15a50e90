use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid map specification: {0}")]
    InvalidMap(String),

    #[error("root solver failed: {0}")]
    RootSolverFailure(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("euclidean derivative requested at or near infinity")]
    EuclideanAtInfinity,

    #[error("operation requires an exact tree, got a sampled one")]
    SampledTreeUnsupported,

    #[error("map has no critical points classified in the Julia set")]
    NoCriticalPointsInJulia,

    #[error("couple components overlap: {0}")]
    OverlappingComponents(String),

    #[error("couple verification failed at iterate {step}, boundary sample {sample}: {detail}")]
    VerificationFailed {
        step: usize,
        sample: usize,
        detail: String,
    },

    #[error("branch set is empty")]
    EmptyBranchSet,

    #[error("t = {0} outside the sampled grid")]
    OutOfGrid(f64),

    #[error("pressure curve has no zero inside the grid")]
    NoZeroInGrid,

    #[error("phase interval does not meet the grid")]
    EmptyInterval,

    #[error("slope target {0} is not attained by the pressure curve")]
    SlopeUnattainable(f64),

    #[error("pressure curve is not strictly convex near t = {0}")]
    StrictConvexityRequired(f64),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
