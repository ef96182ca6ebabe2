use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension N = {0}, need N >= 1")]
    InvalidDimension(i64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("weight exponent {weight} makes r^{{N-1+w}} non-integrable at the origin (N = {dim})")]
    WeightSingularity { weight: f64, dim: usize },

    #[error("angular kernel is singular at r = rho = {0}")]
    KernelSingularity(f64),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("kernel matrix is stale: grid or parameters do not match")]
    StaleKernel,

    #[error("degenerate direction: B(f) vanishes, f is zero alpha-a.e.")]
    DegenerateDirection,

    #[error("no candidate solution: all restarts diverged or had degenerate directions")]
    NoCandidate,

    #[error("exponent derivation failed: {0}")]
    ExponentDerivation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("undefined ratio: the profile is identically zero")]
    UndefinedRatio,

    #[error("need at least 10^4 Monte Carlo samples, got {0}")]
    InsufficientSamples(u64),

    #[error("kernel cache format error: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
