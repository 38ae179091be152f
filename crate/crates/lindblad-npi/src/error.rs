use thiserror::Error;

/// Errors produced by model construction and the integrators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state dimension {0} exceeds the supported dense-matrix budget")]
    DimensionOverflow(usize),

    #[error("singular linear system in implicit flow at t = {t}; the step size is too large for the generator spectrum")]
    SingularSystem { t: f64 },

    #[error("rank {rank} exceeds the configured maximum {max_rank} after truncation")]
    RankOverflow { rank: usize, max_rank: usize },

    #[error("generator time derivatives are unavailable: tabulated control pulses carry no analytic derivatives")]
    DerivativesUnavailable,

    #[error("zero low-rank factor: the state has been lost entirely")]
    ZeroFactor,

    #[error("reference resolution check failed: halving the step changed the result by {observed:.3e} (allowed {allowed:.3e})")]
    ResolutionCheck { observed: f64, allowed: f64 },

    #[error("numerical divergence detected: {0}")]
    Diverged(String),
}
