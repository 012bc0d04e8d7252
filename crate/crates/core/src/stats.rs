//! Small statistics kit: compensated summation, log-log regression, fractal
//! dimensions and the Kolmogorov–Smirnov distance to an exponential law.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Neumaier-compensated running sum. Adding the same values in the same order
/// always produces the same bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, compensation: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator, reduced in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// Result of a straight-line fit of `ln I` against `ln N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Residual degrees of freedom (`points - 2`). When zero the fit is an
    /// exact interpolation and `slope_stderr` is reported as 0.
    pub dof: usize,
}

/// Weighted least squares of `ln I = intercept + slope·ln N` with weights
/// `(I/σ)²`, i.e. inverse variances of `ln I`.
///
/// Points are `(N, I, σ)`. If any `σ` is zero the points are treated as exact
/// and all weights are set equal.
pub fn fit_loglog(points: &[(f64, f64, f64)]) -> Result<LogLogFit> {
    let exact = points.iter().any(|&(_, _, sigma)| sigma <= 0.0);
    fit_impl(points, !exact)
}

/// Ordinary (unit-weight) least squares on `(ln N, ln I)`.
pub fn fit_loglog_unweighted(points: &[(f64, f64, f64)]) -> Result<LogLogFit> {
    fit_impl(points, false)
}

fn fit_impl(points: &[(f64, f64, f64)], weighted: bool) -> Result<LogLogFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: points.len() });
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    let mut ws = Vec::with_capacity(points.len());
    for &(n, value, sigma) in points {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveMoment(value));
        }
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("sizes must be positive"));
        }
        xs.push(n.ln());
        ys.push(value.ln());
        ws.push(if weighted {
            let rel = sigma / value;
            1.0 / (rel * rel)
        } else {
            1.0
        });
    }

    let w_total = compensated_sum(ws.iter().copied());
    let x_mean = compensated_sum(xs.iter().zip(&ws).map(|(x, w)| x * w)) / w_total;
    let y_mean = compensated_sum(ys.iter().zip(&ws).map(|(y, w)| y * w)) / w_total;
    let sxx = compensated_sum(xs.iter().zip(&ws).map(|(x, w)| w * (x - x_mean) * (x - x_mean)));
    let sxy = compensated_sum(
        xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| w * (x - x_mean) * (y - y_mean)),
    );
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("log-log fit needs at least two distinct sizes"));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let dof = points.len() - 2;
    let slope_stderr = if dof == 0 {
        0.0
    } else {
        let rss = compensated_sum(xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| {
            let r = y - intercept - slope * x;
            w * r * r
        }));
        (rss / dof as f64 / sxx).sqrt()
    };
    Ok(LogLogFit { slope, intercept, slope_stderr, dof })
}

/// `d_q = −slope/(q−1)` with the standard error propagated linearly.
pub fn fractal_dimension(slope: f64, slope_stderr: f64, q: f64) -> Result<(f64, f64)> {
    if q == 1.0 {
        return Err(Error::UndefinedAtUnitOrder);
    }
    let scale = 1.0 / (q - 1.0);
    // Keep an exact zero slope at +0 rather than -0.
    let d = if slope == 0.0 { 0.0 } else { -slope * scale };
    Ok((d, slope_stderr * scale.abs()))
}

/// Kolmogorov–Smirnov sup-distance between the empirical distribution of
/// `samples` and the exponential law with density `rate·exp(−rate·x)`.
/// The slice is sorted in place.
pub fn ks_distance_exponential(samples: &mut [f64], rate: f64) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let m = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let cdf = if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() };
        let above = (i + 1) as f64 / m - cdf;
        let below = cdf - i as f64 / m;
        d = d.max(above).max(below);
    }
    d
}

/// Critical KS distance at significance `alpha` for `m` samples, using the
/// asymptotic Kolmogorov quantile with Stephens' finite-sample correction.
pub fn ks_critical_value(m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let root = (m as f64).sqrt();
    c / (root + 0.12 + 0.11 / root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let points: Vec<_> = [100.0f64, 200.0, 400.0, 800.0]
            .iter()
            .map(|&n| (n, 4.0 * n.powf(-0.5), 0.0))
            .collect();
        let fit = fit_loglog(&points).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 4.0f64.ln()).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
        assert_eq!(fit.dof, 2);
    }

    #[test]
    fn two_points_interpolate_with_zero_dof() {
        let fit = fit_loglog(&[(10.0, 1.0, 0.1), (100.0, 0.1, 0.01)]).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert_eq!(fit.slope_stderr, 0.0);
        assert_eq!(fit.dof, 0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert_eq!(
            fit_loglog(&[(10.0, 1.0, 0.1), (20.0, 0.0, 0.1), (30.0, 1.0, 0.1)]),
            Err(Error::NonPositiveMoment(0.0))
        );
        assert!(matches!(fit_loglog(&[(10.0, 1.0, 0.1)]), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn fractal_dimension_examples() {
        let (d, _) = fractal_dimension(-1.1, 0.0, 2.2).unwrap();
        assert!((d - 1.1 / 1.2).abs() < 1e-15);
        let q = 3.5;
        assert_eq!(fractal_dimension(-(q - 1.0), 0.0, q).unwrap().0, 1.0);
        assert_eq!(fractal_dimension(0.0, 0.0, 2.0).unwrap().0, 0.0);
        assert_eq!(fractal_dimension(-0.5, 0.1, 1.0), Err(Error::UndefinedAtUnitOrder));
        let (_, se) = fractal_dimension(-1.0, 0.2, 3.0).unwrap();
        assert!((se - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ks_distance_of_quantile_grid_is_small() {
        let m = 1000;
        let rate = 3.0;
        let mut xs: Vec<f64> =
            (0..m).map(|i| -(1.0 - (i as f64 + 0.5) / m as f64).ln() / rate).collect();
        let d = ks_distance_exponential(&mut xs, rate);
        assert!((d - 0.5 / m as f64).abs() < 1e-12);
        // Wrong rate is far away.
        assert!(ks_distance_exponential(&mut xs, 2.0 * rate) > 0.2);
    }

    #[test]
    fn ks_critical_value_matches_table() {
        // Asymptotic 1% quantile of the Kolmogorov distribution is 1.6276.
        let d = ks_critical_value(1_000_000, 0.01);
        assert!((d * 1000.0 - 1.6276).abs() < 1e-3);
    }
}
