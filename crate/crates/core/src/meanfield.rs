//! Self-consistent mean-field system for the deformed ensemble.
//!
//! At energy `E` the real pair `(t, s)`, `s > 0`, solves
//!
//! ```text
//! t = (1/N) Σ v_i (E − v_i t) / D_i,     1 = (1/N) Σ v_i² / D_i,
//! D_i = (E − v_i t)² + s² v_i²,
//! ```
//!
//! and the mean density of states is `ρ(E) = s/(πN) Σ v_i / D_i`.
//!
//! The solver works with `u = s²` so that the `s > 0` branch is kept by
//! rejecting steps with `u ≤ 0`. Every per-component quantity is written in
//! terms of `r_i = E/v_i − t`, which stays finite when the `v_i` span hundreds
//! of orders of magnitude (exponential profiles).


#[allow(unused_imports)]
use num_traits::Float;
use crate::profiles::DeformationProfile;
use crate::stats::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub energy: f64,
    pub t: f64,
    pub s: f64,
    /// Sup-norm of the two equation residuals at `(t, s)`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub energy: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub homotopy_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 200, homotopy_steps: 8 }
    }
}

/// Returns `(r/(r²+u), 1/(r²+u))` without forming `r²` when `|r|` is large.
#[inline]
fn kernel(v: f64, energy: f64, t: f64, u: f64) -> (f64, f64) {
    let r = energy / v - t;
    if r.abs() > 1.0 {
        let h1 = 1.0 / (r + u / r);
        (h1, h1 / r)
    } else {
        let den = r * r + u;
        (r / den, 1.0 / den)
    }
}

struct System {
    f: [f64; 2],
    jac: [[f64; 2]; 2],
}

impl System {
    fn residual(&self) -> f64 {
        self.f[0].abs().max(self.f[1].abs())
    }
}

fn evaluate(values: &[f64], energy: f64, t: f64, u: f64) -> System {
    let n = values.len() as f64;
    let mut h1 = CompensatedSum::new();
    let mut h2 = CompensatedSum::new();
    let mut d_tt = CompensatedSum::new();
    let mut cross = CompensatedSum::new();
    let mut d_uu = CompensatedSum::new();
    for &v in values {
        let (a, b) = kernel(v, energy, t, u);
        h1.add(a);
        h2.add(b);
        d_tt.add(a * a - u * b * b);
        cross.add(a * b);
        d_uu.add(b * b);
    }
    let cross = cross.value() / n;
    System {
        f: [t - h1.value() / n, 1.0 - h2.value() / n],
        jac: [[1.0 - d_tt.value() / n, cross], [-2.0 * cross, d_uu.value() / n]],
    }
}

/// Residuals of both self-consistency equations at `(t, s)`.
pub fn residuals(profile: &DeformationProfile, energy: f64, t: f64, s: f64) -> [f64; 2] {
    evaluate(profile.values(), energy, t, s * s).f
}

struct Failure {
    t: f64,
    residual: f64,
    iterations: usize,
}

fn newton(
    values: &[f64],
    energy: f64,
    (mut t, mut u): (f64, f64),
    opts: &SolverOptions,
) -> core::result::Result<SaddlePoint, Failure> {
    let mut sys = evaluate(values, energy, t, u);
    let mut res = sys.residual();
    for iteration in 0..=opts.max_iterations {
        if res <= opts.tolerance {
            return Ok(SaddlePoint { energy, t, s: u.sqrt(), residual: res, iterations: iteration });
        }
        if iteration == opts.max_iterations {
            break;
        }
        let [[a, b], [c, d]] = sys.jac;
        let det = a * d - b * c;
        if !(det.is_finite() && det != 0.0) {
            break;
        }
        let dt = (-sys.f[0] * d + b * sys.f[1]) / det;
        let du = (-a * sys.f[1] + c * sys.f[0]) / det;

        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-12 {
            let (t_new, u_new) = (t + lambda * dt, u + lambda * du);
            if u_new > 0.0 && t_new.is_finite() && u_new.is_finite() {
                let trial = evaluate(values, energy, t_new, u_new);
                let trial_res = trial.residual();
                if trial_res < res || trial_res <= opts.tolerance {
                    t = t_new;
                    u = u_new;
                    sys = trial;
                    res = trial_res;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Failure { t, residual: res, iterations: iteration + 1 });
        }
    }
    Err(Failure { t, residual: res, iterations: opts.max_iterations })
}

/// Closed-form GUE saddle point `t = E/2`, `s = √(1 − (E/2)²)`.
pub fn gue_closed_form(energy: f64) -> Result<SaddlePoint> {
    if !(energy.abs() < 2.0) {
        return Err(Error::NoBulkSolution { energy });
    }
    let t = energy / 2.0;
    Ok(SaddlePoint { energy, t, s: (1.0 - t * t).sqrt(), residual: 0.0, iterations: 0 })
}

fn default_guess(energy: f64) -> (f64, f64) {
    match gue_closed_form(energy) {
        Ok(sp) => (sp.t, sp.s),
        Err(_) => (energy / 2.0, 0.1),
    }
}

/// Solves the self-consistency system with default options.
pub fn solve_saddle(profile: &DeformationProfile, energy: f64) -> Result<SaddlePoint> {
    solve_saddle_with(profile, energy, &SolverOptions::default(), None)
}

/// Solves the self-consistency system.
///
/// `guess` is an optional `(t, s)` starting point (e.g. a neighbouring energy
/// on a grid); otherwise the GUE closed form seeds the iteration. If damped
/// Newton fails, the profile is deformed continuously from the constant one
/// in `homotopy_steps` stages.
pub fn solve_saddle_with(
    profile: &DeformationProfile,
    energy: f64,
    opts: &SolverOptions,
    guess: Option<(f64, f64)>,
) -> Result<SaddlePoint> {
    if !energy.is_finite() {
        return Err(Error::InvalidArgument("energy must be finite"));
    }
    let values = profile.values();
    let (t0, s0) = guess.unwrap_or_else(|| default_guess(energy));
    let first = match newton(values, energy, (t0, s0 * s0), opts) {
        Ok(sp) => return Ok(sp),
        Err(f) => f,
    };

    let mut total = first.iterations;
    let mut worst = first;
    let (mut t, s) = default_guess(energy);
    let mut u = s * s;
    let steps = opts.homotopy_steps.max(1);
    let mut continued = true;
    for k in 0..=steps {
        let stage = profile.interpolate_from_constant(k as f64 / steps as f64);
        match newton(stage.values(), energy, (t, u), opts) {
            Ok(sp) => {
                total += sp.iterations;
                t = sp.t;
                u = sp.s * sp.s;
            }
            Err(f) => {
                total += f.iterations;
                worst = f;
                continued = false;
                break;
            }
        }
    }
    if continued {
        let sys = evaluate(values, energy, t, u);
        return Ok(SaddlePoint {
            energy,
            t,
            s: u.sqrt(),
            residual: sys.residual(),
            iterations: total,
        });
    }

    if outside_support(values, energy, worst.t) {
        return Err(Error::NoBulkSolution { energy });
    }
    if let Some((t, u)) = reduced_search(values, energy) {
        if let Ok(mut sp) = newton(values, energy, (t, u), opts) {
            sp.iterations += total;
            return Ok(sp);
        }
    }
    Err(Error::NonConvergence { energy, residual: worst.residual, iterations: total })
}

/// `u(t)` solving the second equation at fixed `t`, if it has a positive
/// root. The left-hand side decreases in `u` and is below `1/u`, so the root
/// lies in `(0, 1)`.
fn u_of_t(values: &[f64], energy: f64, t: f64) -> Option<f64> {
    let n = values.len() as f64;
    let g = |u: f64| {
        let mut acc = CompensatedSum::new();
        for &v in values {
            acc.add(kernel(v, energy, t, u).1);
        }
        acc.value() / n - 1.0
    };
    let (mut lo, mut hi) = (-70.0f64, 0.0f64);
    if !(g(lo.exp()) > 0.0) {
        return None;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((0.5 * (lo + hi)).exp())
}

/// Fallback for profiles where Newton and continuation both stall: eliminate
/// `u` through the second equation and bracket the first in `t`. Cauchy–Schwarz
/// on the two equations gives `|t| ≤ 1`, so a grid on `[−1, 1]` covers every
/// solution that is not narrower than the grid spacing.
fn reduced_search(values: &[f64], energy: f64) -> Option<(f64, f64)> {
    const GRID: usize = 2000;
    let n = values.len() as f64;
    let first = |t: f64, u: f64| {
        let mut acc = CompensatedSum::new();
        for &v in values {
            acc.add(kernel(v, energy, t, u).0);
        }
        t - acc.value() / n
    };
    let point = |t: f64| u_of_t(values, energy, t).map(|u| (t, u, first(t, u)));
    let mut prev = point(-1.0);
    for k in 1..=GRID {
        let next = point(-1.0 + 2.0 * k as f64 / GRID as f64);
        if let (Some(a), Some(b)) = (prev, next) {
            if a.2 == 0.0 {
                return Some((a.0, a.1));
            }
            if a.2.signum() != b.2.signum() {
                if let Some(root) = bisect(a, b, &point) {
                    return Some(root);
                }
            }
        }
        prev = next;
    }
    None
}

fn bisect(
    mut a: (f64, f64, f64),
    mut b: (f64, f64, f64),
    point: &dyn Fn(f64) -> Option<(f64, f64, f64)>,
) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let mid = point(0.5 * (a.0 + b.0))?;
        if mid.2.signum() == a.2.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some((0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1)))
}

/// Outside the support the `u → 0` limit of the system has a real solution
/// `t = (1/N) Σ 1/r_i` at which the second left-hand side `(1/N) Σ 1/r_i²`
/// is below one, so no positive `u` can balance it.
fn outside_support(values: &[f64], energy: f64, hint: f64) -> bool {
    let n = values.len() as f64;
    let moments = |t: f64| {
        let mut first = CompensatedSum::new();
        let mut second = CompensatedSum::new();
        for &v in values {
            let inv = 1.0 / (energy / v - t);
            first.add(inv);
            second.add(inv * inv);
        }
        (first.value() / n, second.value() / n)
    };
    for start in [0.0, hint] {
        let mut t = start;
        let mut converged = false;
        for _ in 0..5000 {
            let (m1, m2) = moments(t);
            // Newton on g(t) = t − m1 once the contraction is mild; plain
            // fixed-point steps otherwise.
            let next = if m2 < 0.5 { t - (t - m1) / (1.0 - m2) } else { m1 };
            if !next.is_finite() {
                break;
            }
            let done = (next - t).abs() <= 1e-14 * (1.0 + t.abs());
            t = next;
            if done {
                converged = true;
                break;
            }
        }
        if converged && moments(t).1 < 1.0 - 1e-12 {
            return true;
        }
    }
    false
}

/// `ρ(E) = s/(πN) Σ v_i/D_i` at a converged saddle point.
pub fn density_of_states(profile: &DeformationProfile, saddle: &SaddlePoint) -> SpectralDensity {
    let n = profile.size() as f64;
    let u = saddle.s * saddle.s;
    let mut acc = CompensatedSum::new();
    for &v in profile.values() {
        let (_, h2) = kernel(v, saddle.energy, saddle.t, u);
        acc.add(h2 / v);
    }
    SpectralDensity {
        energy: saddle.energy,
        rho: saddle.s / (core::f64::consts::PI * n) * acc.value(),
    }
}

/// Per-component factor `s·v_n/D_n`, which controls the local moments and the
/// component law.
pub(crate) fn local_weights<'a>(
    profile: &'a DeformationProfile,
    saddle: &'a SaddlePoint,
) -> impl Iterator<Item = f64> + 'a {
    let u = saddle.s * saddle.s;
    let (energy, t, s) = (saddle.energy, saddle.t, saddle.s);
    profile.values().iter().map(move |&v| s * kernel(v, energy, t, u).1 / v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{build_profile, Family};
    use core::f64::consts::PI;

    #[test]
    fn gue_closed_form_examples() {
        let sp = gue_closed_form(0.0).unwrap();
        assert_eq!((sp.t, sp.s), (0.0, 1.0));
        let sp = gue_closed_form(1.0).unwrap();
        assert_eq!(sp.t, 0.5);
        assert!((sp.s - 0.866_025_403_784_438_6).abs() < 1e-15);
        assert_eq!(gue_closed_form(2.0), Err(Error::NoBulkSolution { energy: 2.0 }));
    }

    #[test]
    fn constant_profile_matches_closed_form() {
        let p = build_profile(&Family::Constant, 7).unwrap();
        for e in [0.0, 1.0, -1.3, 1.9] {
            let sp = solve_saddle(&p, e).unwrap();
            let gue = gue_closed_form(e).unwrap();
            assert!((sp.t - gue.t).abs() < 1e-10 && (sp.s - gue.s).abs() < 1e-10);
        }
        let sp = solve_saddle(&p, 1.0).unwrap();
        let rho = density_of_states(&p, &sp).rho;
        assert!((rho - 0.75f64.sqrt() / PI).abs() < 1e-12);
    }

    #[test]
    fn zero_energy_collapses_to_unit_s() {
        for family in [Family::PowerLaw(-0.5), Family::PowerLaw(-2.0), Family::Exponential(2.0)] {
            let p = build_profile(&family, 1000).unwrap();
            let sp = solve_saddle(&p, 0.0).unwrap();
            assert_eq!((sp.t, sp.s), (0.0, 1.0));
            let [r1, r2] = residuals(&p, 0.0, sp.t, sp.s);
            assert!(r1.abs() <= 1e-10 && r2.abs() <= 1e-10);
            let rho = density_of_states(&p, &sp).rho;
            let expected: f64 = p.inverse_values().sum::<f64>() / (PI * 1000.0);
            assert!((rho - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn outside_support_is_reported() {
        let p = build_profile(&Family::Constant, 10).unwrap();
        assert_eq!(solve_saddle(&p, 2.5), Err(Error::NoBulkSolution { energy: 2.5 }));
        assert_eq!(solve_saddle(&p, -3.0), Err(Error::NoBulkSolution { energy: -3.0 }));
        let p = build_profile(&Family::PowerLaw(-0.5), 200).unwrap();
        assert_eq!(solve_saddle(&p, 1.9), Err(Error::NoBulkSolution { energy: 1.9 }));
    }

    #[test]
    fn deformed_profile_off_zero_energy() {
        let p = build_profile(&Family::PowerLaw(-0.5), 500).unwrap();
        let sp = solve_saddle(&p, 0.5).unwrap();
        assert!(sp.s > 0.0 && sp.residual <= 1e-12);
        let [r1, r2] = residuals(&p, sp.energy, sp.t, sp.s);
        assert!(r1.abs() <= 1e-10 && r2.abs() <= 1e-10);
        let mirrored = solve_saddle(&p, -0.5).unwrap();
        assert!((mirrored.t + sp.t).abs() < 1e-12 && (mirrored.s - sp.s).abs() < 1e-12);
    }

    #[test]
    fn exponential_profile_grid_solves_or_reports_no_bulk() {
        let p = build_profile(&Family::Exponential(2.0), 1000).unwrap();
        for e in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            match solve_saddle(&p, e) {
                Ok(sp) => {
                    let [r1, r2] = residuals(&p, e, sp.t, sp.s);
                    assert!(r1.abs().max(r2.abs()) <= 1e-10, "E = {e}");
                }
                Err(Error::NoBulkSolution { .. }) => {}
                Err(other) => panic!("E = {e}: {other:?}"),
            }
        }
        let sp = solve_saddle(&p, -1.0).unwrap();
        assert!((sp.t + 0.0165).abs() < 2e-3 && (sp.s * sp.s - 6.07e-3).abs() < 2e-4);
    }
}
