//! Closed-form eigenvector statistics: local moments, the exponential
//! component law, the zero-energy formula and the finite-`N` α-integral.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::meanfield::{local_weights, SaddlePoint, SpectralDensity};
use crate::profiles::DeformationProfile;
use crate::quadrature::{integrate, Tolerance};
use crate::special::gamma;
use crate::stats::compensated_sum;
use crate::{Error, Result};

/// Predicted local moments `I_q(n) = ⟨|ψ_n|^{2q}⟩` at energy `E` and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPrediction {
    pub q: f64,
    pub energy: f64,
    pub per_component: Vec<f64>,
    pub total: f64,
}

impl MomentPrediction {
    fn new(q: f64, energy: f64, per_component: Vec<f64>) -> Self {
        let total = compensated_sum(per_component.iter().copied());
        Self { q, energy, per_component, total }
    }
}

/// Exponential law `P_n(x) = λ_n e^{−λ_n x}` of `x = |ψ_n|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentLaw {
    /// One-based component index.
    pub index: usize,
    pub rate: f64,
}

impl ComponentLaw {
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.rate * (-self.rate * x).exp()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    /// `⟨x^q⟩ = Γ(q+1)/λ^q`.
    pub fn moment(&self, q: f64) -> f64 {
        gamma(q + 1.0) / self.rate.powf(q)
    }
}

fn check_order(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidMomentOrder(q))
    }
}

/// `I_q(n) = Γ(q+1)/(πρN)^q · [s·v_n/((E − v_n t)² + s²v_n²)]^q`.
pub fn moment_prediction(
    profile: &DeformationProfile,
    saddle: &SaddlePoint,
    rho: &SpectralDensity,
    q: f64,
) -> Result<MomentPrediction> {
    check_order(q)?;
    let scale = PI * rho.rho * profile.size() as f64;
    let prefactor = gamma(q + 1.0);
    let per_component =
        local_weights(profile, saddle).map(|w| prefactor * (w / scale).powf(q)).collect();
    Ok(MomentPrediction::new(q, saddle.energy, per_component))
}

/// Zero-energy closed form `I_q(n) = Γ(q+1)·x_n^q/(Σ_i x_i)^q`, `x_i = 1/v_i`.
pub fn zero_energy_moments(profile: &DeformationProfile, q: f64) -> Result<MomentPrediction> {
    check_order(q)?;
    let total_x = compensated_sum(profile.inverse_values());
    let prefactor = gamma(q + 1.0);
    let per_component =
        profile.inverse_values().map(|x| prefactor * (x / total_x).powf(q)).collect();
    Ok(MomentPrediction::new(q, 0.0, per_component))
}

/// Rate `λ_n = πρN·((E − v_n t)² + s²v_n²)/(s·v_n)` of the law of `|ψ_n|²`;
/// `n` is one-based.
pub fn component_law(
    profile: &DeformationProfile,
    saddle: &SaddlePoint,
    rho: &SpectralDensity,
    n: usize,
) -> Result<ComponentLaw> {
    let size = profile.size();
    if n == 0 || n > size {
        return Err(Error::IndexOutOfRange { index: n, size });
    }
    let weight = local_weights(profile, saddle).nth(n - 1).expect("index checked");
    Ok(ComponentLaw { index: n, rate: PI * rho.rho * size as f64 / weight })
}

/// Finite-`N` zero-energy moment from independent exponential GUE components:
///
/// ```text
/// I_q(n) = q·(x_n/N)^q ∫_0^∞ α^{q−1} (1 + αx_n/N)^{−q} Π_i (1 + αx_i/N)^{−1} dα
/// ```
///
/// evaluated with `α = β·N/Σx` and `β = τ/(1−τ)` on `τ ∈ [0, 1)` to relative
/// accuracy `1e-8`. `n` is one-based.
pub fn finite_n_oracle(profile: &DeformationProfile, q: f64, n: usize) -> Result<f64> {
    check_order(q)?;
    let size = profile.size();
    if n == 0 || n > size {
        return Err(Error::IndexOutOfRange { index: n, size });
    }
    if (size as f64) <= q {
        return Err(Error::InvalidArgument("the α-integral diverges unless N > q"));
    }
    let total_x = compensated_sum(profile.inverse_values());
    let scaled: Vec<f64> = profile.inverse_values().map(|x| x / total_x).collect();
    let y_n = scaled[n - 1];

    let integrand = |tau: f64| {
        if tau <= 0.0 || tau >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - tau;
        let beta = tau / one_minus;
        let mut log = (q - 1.0) * beta.ln() - q * (beta * y_n).ln_1p() - 2.0 * one_minus.ln();
        log -= compensated_sum(scaled.iter().map(|y| (beta * y).ln_1p()));
        log.exp()
    };
    let tol = Tolerance { absolute: 0.0, relative: 1e-8, max_segments: 4000 };
    let integral = integrate(integrand, 0.0, 1.0, tol)?;
    Ok(q * y_n.powf(q) * integral.value)
}
