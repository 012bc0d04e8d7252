//! Deformation profiles `v_n = w_n²`.
//!
//! Power laws use the size-dependent normalizations that keep the density of
//! states `N`-independent:
//!
//! | exponent      | `v_n`          |
//! |---------------|----------------|
//! | `p ≥ 0`       | `(N/n)^p`      |
//! | `-1 < p < 0`  | `(N/n)^p`      |
//! | `p < -1`      | `1/(N·n^p)`    |
//!
//! The exponential family is `v_n = N·x^{-n}` with `x > 1`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::stats::compensated_sum;
use crate::{Error, Result};

/// Generating family of a profile, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Constant,
    PowerLaw(f64),
    Exponential(f64),
    Explicit(Vec<f64>),
}

/// Tag recorded on a built profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    Constant,
    PowerLaw(f64),
    Exponential(f64),
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationProfile {
    kind: ProfileKind,
    values: Vec<f64>,
}

impl DeformationProfile {
    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Inverse variances `x_n = 1/v_n`.
    pub fn inverse_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| 1.0 / v)
    }

    /// Diagonal weights `w_n = √v_n`.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.sqrt())
    }

    /// `max v / min v`.
    pub fn dynamic_range(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi / lo
    }

    /// The linear interpolation `1 + λ(v_n − 1)` towards the constant profile,
    /// used for homotopy continuation in the saddle-point solver.
    pub(crate) fn interpolate_from_constant(&self, lambda: f64) -> Self {
        Self {
            kind: ProfileKind::Explicit,
            values: self.values.iter().map(|v| 1.0 + lambda * (v - 1.0)).collect(),
        }
    }
}

/// Builds the profile of the given family at matrix size `n`.
pub fn build_profile(family: &Family, n: usize) -> Result<DeformationProfile> {
    if n < 2 {
        return Err(Error::SizeTooSmall(n));
    }
    let size = n as f64;
    let (kind, values): (ProfileKind, Vec<f64>) = match family {
        Family::Constant => (ProfileKind::Constant, alloc::vec![1.0; n]),
        &Family::PowerLaw(p) => {
            if !p.is_finite() {
                return Err(Error::InvalidArgument("power-law exponent must be finite"));
            }
            if p == -1.0 {
                return Err(Error::MarginalExponent);
            }
            let values = if p > -1.0 {
                (1..=n).map(|k| (size / k as f64).powf(p)).collect()
            } else {
                (1..=n).map(|k| 1.0 / (size * (k as f64).powf(p))).collect()
            };
            (ProfileKind::PowerLaw(p), values)
        }
        &Family::Exponential(base) => {
            if !(base > 1.0) || !base.is_finite() {
                return Err(Error::InvalidBase(base));
            }
            let values = (1..=n)
                .map(|k| match i32::try_from(k) {
                    Ok(k) => size * base.powi(-k),
                    Err(_) => size * base.powf(-(k as f64)),
                })
                .collect();
            (ProfileKind::Exponential(base), values)
        }
        Family::Explicit(values) => {
            if values.len() != n {
                return Err(Error::InvalidArgument("explicit profile length differs from N"));
            }
            (ProfileKind::Explicit, values.clone())
        }
    };
    if let Some((index, &value)) =
        values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::NonPositiveEntry { index, value });
    }
    Ok(DeformationProfile { kind, values })
}

/// `(Σ x_i²)/(ρ(0)·N²)` with `x_i = 1/v_i`. Small values mean the
/// zero-energy closed form is reliable; the ratio is returned unthresholded.
pub fn validity_ratio(profile: &DeformationProfile, rho0: f64) -> Result<f64> {
    if !(rho0 > 0.0) || !rho0.is_finite() {
        return Err(Error::InvalidArgument("density of states at E = 0 must be positive"));
    }
    let n = profile.size() as f64;
    let sum_sq = compensated_sum(profile.inverse_values().map(|x| x * x));
    Ok(sum_sq / (rho0 * n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn constant_profile() {
        let p = build_profile(&Family::Constant, 4).unwrap();
        assert_eq!(p.values(), &[1.0; 4]);
        assert_eq!(p.kind(), ProfileKind::Constant);
    }

    #[test]
    fn power_law_normalizations() {
        let p = build_profile(&Family::PowerLaw(-0.5), 4).unwrap();
        let expected = [0.5, 0.5f64.sqrt(), 0.75f64.sqrt(), 1.0];
        for (v, e) in p.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
        let p = build_profile(&Family::PowerLaw(-2.0), 3).unwrap();
        let expected = [1.0 / 3.0, 4.0 / 3.0, 3.0];
        for (v, e) in p.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
        let p = build_profile(&Family::PowerLaw(1.5), 5).unwrap();
        assert_eq!(p.values()[4], 1.0);
        assert_eq!(p.values()[0], 5.0f64.powf(1.5));
    }

    #[test]
    fn exponential_profile() {
        let p = build_profile(&Family::Exponential(2.0), 4).unwrap();
        assert_eq!(p.values(), &[2.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn rejected_inputs() {
        assert_eq!(build_profile(&Family::Constant, 1), Err(Error::SizeTooSmall(1)));
        assert_eq!(build_profile(&Family::PowerLaw(-1.0), 10), Err(Error::MarginalExponent));
        assert_eq!(build_profile(&Family::Exponential(1.0), 10), Err(Error::InvalidBase(1.0)));
        assert_eq!(
            build_profile(&Family::Explicit(alloc::vec![1.0, -2.0]), 2),
            Err(Error::NonPositiveEntry { index: 1, value: -2.0 })
        );
        // 2^-1100 underflows to zero.
        assert!(matches!(
            build_profile(&Family::Exponential(2.0), 1100),
            Err(Error::NonPositiveEntry { .. })
        ));
    }

    #[test]
    fn validity_ratio_examples() {
        let p = build_profile(&Family::Constant, 100).unwrap();
        let r = validity_ratio(&p, 1.0 / PI).unwrap();
        assert!((r - PI / 100.0).abs() < 1e-15);

        // Direct summation oracle for the power law: x_i = √(N/i), Σ x_i² = N·H_N,
        // ρ(0) = Σ x_i/(πN).
        let n = 100;
        let p = build_profile(&Family::PowerLaw(-0.5), n).unwrap();
        let harmonic: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
        let rho0: f64 = (1..=n).map(|i| (n as f64 / i as f64).sqrt()).sum::<f64>() / (PI * n as f64);
        let r = validity_ratio(&p, rho0).unwrap();
        let expected = n as f64 * harmonic / (rho0 * (n * n) as f64);
        assert!((r - expected).abs() < 1e-12 * expected);
        assert!(r < 1.0);

        let p = build_profile(&Family::Exponential(2.0), 50).unwrap();
        assert!(validity_ratio(&p, 1.0).unwrap() > 1e20);
    }
}
