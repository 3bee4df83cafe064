use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular or ill-conditioned (reciprocal condition {rcond:e})")]
    SingularMatrix { rcond: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid exponent p = {0}; p must exceed 1")]
    InvalidExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map returned a non-finite value at {point:?}")]
    EvaluationFailure { point: Vec<f64> },

    #[error("degenerate Jacobian {value:e} at x = {x:?}, y = {y:?}")]
    DegenerateJacobian {
        x: Vec<f64>,
        y: Vec<f64>,
        value: f64,
    },

    #[error("non-finite integrand at x = {x:?}")]
    NonFiniteIntegrand { x: Vec<f64> },

    #[error("surface integral l(x) = {value:e} vanishes at x = {x:?}")]
    VanishingLength { x: Vec<f64>, value: f64 },

    #[error("Newton inversion did not converge for z = {z:?} (residual {residual:e})")]
    InversionFailure { z: Vec<f64>, residual: f64 },

    #[error("submersion does not match the family (residual {residual:e} at x = {x:?})")]
    InconsistentSubmersion { x: Vec<f64>, residual: f64 },

    #[error("discrete solver stopped after {iterations} iterations with relative gap {gap:e}")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("surface {0} has no positive weight")]
    InfeasibleSurface(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
