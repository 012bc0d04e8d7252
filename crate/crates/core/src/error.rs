use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix size must be at least 2, got {0}")]
    SizeTooSmall(usize),
    #[error("deformation entry v[{index}] = {value} is not a positive finite number")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("power-law exponent p = -1 is not covered by any normalization regime")]
    MarginalExponent,
    #[error("exponential base must exceed 1, got {0}")]
    InvalidBase(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("moment order must be positive and finite, got {0}")]
    InvalidMomentOrder(f64),
    #[error("component index {index} out of range 1..={size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("no s > 0 solution at E = {energy} (outside the spectral support)")]
    NoBulkSolution { energy: f64 },
    #[error("saddle-point solver did not converge at E = {energy}: residual {residual:e} after {iterations} iterations")]
    NonConvergence { energy: f64, residual: f64, iterations: usize },
    #[error("quadrature did not reach the requested accuracy: estimate {value:e}, error {error:e}")]
    QuadratureNonConvergence { value: f64, error: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("moment estimates must be positive, got {0}")]
    NonPositiveMoment(f64),
    #[error("fractal dimension is undefined at q = 1")]
    UndefinedAtUnitOrder,
}
