use thiserror::Error;

use crate::cubature::Estimate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{family} is not defined in dimension {dim}")]
    DimensionUnsupported { family: &'static str, dim: usize },

    #[error("parameter out of range for {family}: {reason}")]
    ParamOutOfRange { family: &'static str, reason: String },

    #[error("correlation matrix is not positive definite")]
    CorrelationNotPD,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tolerance not reached after {} evaluations (best value {} ± {})", .0.evals, .0.value, .0.error)]
    ToleranceNotReached(Estimate),

    #[error("integrand returned a non-finite value")]
    NonFiniteIntegrand,

    #[error("no exact sampler implemented for {0}")]
    SamplerUnavailable(&'static str),

    #[error("{0} is not an Archimedean family")]
    NotArchimedean(&'static str),

    #[error("no closed form available for {0}")]
    NoClosedForm(String),

    #[error("divergence is infinite: second copula vanishes where the first does not")]
    DivergenceInfinite,

    #[error("data contains non-finite values")]
    NonFiniteData,

    #[error("column {0} is constant")]
    DegenerateColumn(usize),

    #[error("kendall tau {tau} is outside the attainable range of {family}")]
    TauOutOfRange { family: &'static str, tau: f64 },

    #[error("root finding did not converge")]
    NoConvergence,

    #[error("{0} has no rank-inversion estimator")]
    NotFittable(&'static str),

    #[error("unknown copula family '{0}'")]
    UnknownFamily(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
