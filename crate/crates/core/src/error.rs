use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("finite differences requested for order {0} > 4; supply an analytic derivative")]
    OrderTooHigh(usize),
    #[error("base norm is infinite: {0}")]
    NonIntegrable(String),
    #[error("pure-power weight is not integrable at the origin: {0}")]
    OriginSingular(String),
    #[error("limit extrapolation did not converge: {0}")]
    NoConvergence(String),
    #[error("s = {s} is excluded for k = {k} (s in {{-k, ..., -1}})")]
    ExcludedS { s: f64, k: usize },
    #[error("s = {0} < -1 needs N > 1 on the full line; use a half-line domain")]
    DimensionOne(f64),
    #[error("right-hand side is infinite: {0}")]
    DivergentRhs(String),
    #[error("profile is not flagged as decaying at infinity")]
    NoDecay,
    #[error("every family member was skipped")]
    EmptyEffective,
    #[error("inadmissible exponents: {0}")]
    InadmissiblePq(String),
    #[error("field does not have zero spherical means (max |u_S| = {0:e})")]
    NotMeanZero(f64),
    #[error("s = 0 in the exponential scale; use the power scale with s = -N/p")]
    SZero,
    #[error("Taylor-point coefficients need p > N (p = {p}, N = {n})")]
    TaylorInadmissible { p: f64, n: usize },
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("unknown field: {0}")]
    UnknownField(String),
    #[error("local integrability check failed: {0}")]
    LocalIntegrability(String),
}
