//! Analytic eigenvector statistics for the deformed Gaussian unitary ensemble
//! `H = W·H̃·W`, where `H̃` is drawn from GUE and `W = diag(w_n)` is a fixed
//! positive diagonal matrix.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerics:
//!
//! - [`profiles`]: deformation sequences `v_n = w_n²` and the zero-energy
//!   validity ratio.
//! - [`meanfield`]: the self-consistent `(t, s)` system and the mean density
//!   of states.
//! - [`analytic`]: eigenvector moments, the exponential component law, the
//!   zero-energy closed form and the finite-`N` α-integral.
//! - [`scaling`]: asymptotic `N`-scaling regimes of the moments for the
//!   power-law and exponential families.
//! - [`stats`]: compensated sums, log-log fits, fractal dimensions and the
//!   Kolmogorov–Smirnov distance to an exponential law.
//!
//! Sampling, diagonalization and file formats live in the `dgue` crate.

#![no_std]

extern crate alloc;

pub mod analytic;
mod error;
pub mod meanfield;
pub mod profiles;
pub mod quadrature;
pub mod scaling;
pub mod special;
pub mod stats;

pub use analytic::{
    component_law, finite_n_oracle, moment_prediction, zero_energy_moments, ComponentLaw,
    MomentPrediction,
};
pub use error::{Error, Result};
pub use meanfield::{
    density_of_states, gue_closed_form, solve_saddle, SaddlePoint, SolverOptions, SpectralDensity,
};
pub use profiles::{build_profile, validity_ratio, DeformationProfile, Family, ProfileKind};
pub use scaling::{scaling_regime, Regime, ScalingFamily, ScalingLaw};
pub use stats::{fit_loglog, fractal_dimension, LogLogFit};
