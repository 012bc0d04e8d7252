//! Monte Carlo side of the deformed-GUE toolkit: matrix sampling and
//! diagonalization, moment and distribution experiments, run configuration
//! and result files. Analytic predictions live in [`dgue_core`].

pub mod checks;
pub mod config;
pub mod ensemble;
pub mod experiment;
mod lapack;
pub mod output;

pub use dgue_core as core;

// Links the system OpenBLAS that provides LAPACK.
use openblas_src as _;

/// Errors raised by the sampling, experiment and IO layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] dgue_core::Error),
    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("no eigenvalue selected in any realization")]
    EmptyWindow,
    #[error("insufficient data: {got} samples collected, {needed} required")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Core(e) => matches!(
                e,
                dgue_core::Error::NoBulkSolution { .. }
                    | dgue_core::Error::NonConvergence { .. }
                    | dgue_core::Error::QuadratureNonConvergence { .. }
                    | dgue_core::Error::NonPositiveMoment(_)
            ),
            Error::Lapack { .. }
            | Error::NonFinite(_)
            | Error::EmptyWindow
            | Error::InsufficientSamples { .. } => true,
            _ => false,
        }
    }
}
