//! The invariant suite behind `dgue check`. Each check reports a measured
//! value against a tolerance; the configured `tolerance_scale` multiplies
//! every tolerance.

use dgue_core::{
    build_profile, density_of_states, finite_n_oracle, gue_closed_form, moment_prediction,
    solve_saddle, zero_energy_moments, Family,
};
use serde::{Deserialize, Serialize};

use crate::ensemble::{generalized_equivalence_check, sample_gue};
use crate::experiment::{
    distribution_check, estimate_moments, realization_rng, DistributionRun, MomentRun,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &str, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured <= tolerance }
    }
}

/// Runs every check. `seed` drives the Monte Carlo checks.
pub fn run_all(seed: u64, tolerance_scale: f64) -> Result<Vec<CheckOutcome>> {
    let tol = |t: f64| t * tolerance_scale;
    let mut out = Vec::new();

    let (saddle_dev, density_dev) = gue_recovery()?;
    out.push(CheckOutcome::new("gue_recovery_saddle", saddle_dev, tol(1e-10)));
    out.push(CheckOutcome::new("gue_recovery_density", density_dev, tol(1e-10)));
    out.push(CheckOutcome::new("zero_energy_consistency", zero_energy_deviation()?, tol(1e-12)));

    let (beta_dev, halving_dev) = oracle_checks()?;
    out.push(CheckOutcome::new("oracle_beta_reduction", beta_dev, tol(1e-6)));
    out.push(CheckOutcome::new("oracle_convergence_halving", halving_dev, tol(0.01)));

    let (gap, angle) = equivalence(seed)?;
    out.push(CheckOutcome::new("generalized_eigenvalue_gap", gap, tol(1e-8)));
    out.push(CheckOutcome::new("generalized_eigenvector_angle", angle, tol(1e-8)));

    let normalization = estimate_moments(&MomentRun {
        family: Family::PowerLaw(-0.5),
        n: 64,
        energy: 0.0,
        qs: vec![1.0],
        realizations: 20,
        window: None,
        route: None,
        seed,
    })?;
    out.push(CheckOutcome::new(
        "monte_carlo_normalization",
        (normalization[0].total_iq - 1.0).abs(),
        tol(1e-10),
    ));

    let constant = distribution_check(&DistributionRun {
        family: Family::Constant,
        n: 128,
        energy: 0.0,
        component: 1,
        realizations: 700,
        window: None,
        seed,
    })?;
    out.push(CheckOutcome::new(
        "distribution_ks_constant",
        constant.ks_distance,
        tol(constant.ks_critical),
    ));
    out.push(CheckOutcome::new(
        "distribution_rate_constant_sigmas",
        (constant.rate_empirical - constant.rate_theory).abs() / constant.rate_stderr,
        tol(3.0),
    ));

    let power = distribution_check(&DistributionRun {
        family: Family::PowerLaw(-0.5),
        n: 256,
        energy: 0.0,
        component: 128,
        realizations: 400,
        window: None,
        seed,
    })?;
    out.push(CheckOutcome::new("distribution_ks_power_law", power.ks_distance, tol(power.ks_critical)));
    out.push(CheckOutcome::new(
        "distribution_rate_power_law_sigmas",
        (power.rate_empirical - power.rate_theory).abs() / power.rate_stderr,
        tol(3.0),
    ));
    Ok(out)
}

/// Largest deviations of the constant-profile saddle point and density from
/// the semicircle on 41 energies in `[−1.9, 1.9]`.
pub fn gue_recovery() -> Result<(f64, f64)> {
    let profile = build_profile(&Family::Constant, 1000)?;
    let mut saddle_dev = 0.0f64;
    let mut density_dev = 0.0f64;
    for k in 0..41 {
        let e = -1.9 + 0.095 * k as f64;
        let sp = solve_saddle(&profile, e)?;
        let exact = gue_closed_form(e)?;
        saddle_dev = saddle_dev.max((sp.t - exact.t).abs()).max((sp.s - exact.s).abs());
        let rho = density_of_states(&profile, &sp).rho;
        let semicircle = (1.0 - e * e / 4.0).sqrt() / std::f64::consts::PI;
        density_dev = density_dev.max((rho - semicircle).abs());
    }
    Ok((saddle_dev, density_dev))
}

/// Largest per-component relative difference between the general moment
/// formula at the zero-energy saddle and the zero-energy closed form.
pub fn zero_energy_deviation() -> Result<f64> {
    let families =
        [Family::Constant, Family::PowerLaw(-0.5), Family::PowerLaw(-2.0), Family::Exponential(2.0)];
    let mut worst = 0.0f64;
    for family in &families {
        let profile = build_profile(family, 1000)?;
        let saddle = solve_saddle(&profile, 0.0)?;
        let rho = density_of_states(&profile, &saddle);
        for q in [1.0, 1.5, 2.0, 2.2, 3.0] {
            let general = moment_prediction(&profile, &saddle, &rho, q)?;
            let closed = zero_energy_moments(&profile, q)?;
            for (a, b) in general.per_component.iter().zip(&closed.per_component) {
                if *b >= f64::MIN_POSITIVE {
                    worst = worst.max(((a - b) / b).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Relative error of the constant-profile α-integral against
/// `2/(N(N+1))` at `N ∈ {100, 1000}`, and the largest departure from 1/2 of
/// the ratio of successive deviations from the `2/N²` law as `N` doubles.
pub fn oracle_checks() -> Result<(f64, f64)> {
    let mut beta_dev = 0.0f64;
    for n in [100usize, 1000] {
        let profile = build_profile(&Family::Constant, n)?;
        let oracle = finite_n_oracle(&profile, 2.0, 1)?;
        let exact = 2.0 / (n as f64 * (n as f64 + 1.0));
        beta_dev = beta_dev.max(((oracle - exact) / exact).abs());
    }
    let deviations = [100usize, 200, 400, 800]
        .iter()
        .map(|&n| {
            let profile = build_profile(&Family::Constant, n)?;
            let oracle = finite_n_oracle(&profile, 2.0, 1)?;
            Ok((oracle * (n * n) as f64 / 2.0 - 1.0).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let halving_dev =
        deviations.windows(2).map(|w| (w[1] / w[0] - 0.5).abs()).fold(0.0, f64::max);
    Ok((beta_dev, halving_dev))
}

/// Largest eigenvalue gap and eigenvector angle between the two solution
/// routes over 20 draws at `N = 64` with the `p = −1/2` power law.
pub fn equivalence(seed: u64) -> Result<(f64, f64)> {
    let n = 64;
    let profile = build_profile(&Family::PowerLaw(-0.5), n)?;
    let mut gap = 0.0f64;
    let mut angle = 0.0f64;
    for r in 0..20 {
        let h = sample_gue(n, &mut realization_rng(seed, n, r))?;
        let report = generalized_equivalence_check(&h, &profile)?;
        gap = gap.max(report.max_eigenvalue_gap);
        angle = angle.max(report.max_vector_angle);
    }
    Ok((gap, angle))
}
