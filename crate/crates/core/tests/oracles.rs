//! Independent oracles for the finite-N α-integral and the zero-energy
//! closed form.

use dgue_core::{build_profile, finite_n_oracle, zero_energy_moments, Family};

/// Stirling series for ln Γ(x), x ≥ 10, shifted by recurrence below that.
fn ln_gamma_stirling(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// For x_i ≡ 1 the integral reduces to a Beta function:
/// I_q(n) = Γ(q+1)·Γ(N)/Γ(N+q).
fn constant_profile_closed_form(q: f64, n: usize) -> f64 {
    let n = n as f64;
    (ln_gamma_stirling(q + 1.0) + ln_gamma_stirling(n) - ln_gamma_stirling(n + q)).exp()
}

#[test]
fn beta_reduction_for_constant_profile() {
    for n in [100usize, 1000] {
        let p = build_profile(&Family::Constant, n).unwrap();
        let value = finite_n_oracle(&p, 2.0, 7).unwrap();
        let exact = 2.0 / (n as f64 * (n as f64 + 1.0));
        assert!((value / exact - 1.0).abs() < 1e-6, "N={n}: {value} vs {exact}");
        for q in [0.5, 1.5, 2.2, 3.0] {
            let value = finite_n_oracle(&p, q, 1).unwrap();
            let exact = constant_profile_closed_form(q, n);
            assert!((value / exact - 1.0).abs() < 1e-6, "N={n} q={q}: {value} vs {exact}");
        }
    }
    assert!((finite_n_oracle(&build_profile(&Family::Constant, 100).unwrap(), 2.0, 1).unwrap()
        - 1.980_198_019_801_98e-4)
        .abs()
        < 1e-12);
}

#[test]
fn oracle_approaches_zero_energy_formula() {
    let sizes = [250usize, 500, 1000, 2000];
    for family in [Family::Constant, Family::PowerLaw(-0.5)] {
        let mut previous = f64::INFINITY;
        for &n in &sizes {
            let p = build_profile(&family, n).unwrap();
            let oracle = finite_n_oracle(&p, 2.0, 1).unwrap();
            let leading = zero_energy_moments(&p, 2.0).unwrap().per_component[0];
            let gap = (oracle / leading - 1.0).abs();
            assert!(gap < previous, "{family:?} N={n}: gap {gap} did not shrink from {previous}");
            previous = gap;
        }
    }
}

#[test]
fn power_law_oracle_within_a_few_percent() {
    let mut gaps = Vec::new();
    for n in [500usize, 1000] {
        let p = build_profile(&Family::PowerLaw(-0.5), n).unwrap();
        let oracle = finite_n_oracle(&p, 2.0, 1).unwrap();
        let leading = zero_energy_moments(&p, 2.0).unwrap().per_component[0];
        gaps.push((oracle / leading - 1.0).abs());
    }
    assert!(gaps[0] < 0.1, "gap at N=500 is {}", gaps[0]);
    assert!(gaps[1] < gaps[0]);
}

#[test]
fn zero_energy_matches_direct_summation() {
    let n = 300;
    let p = build_profile(&Family::PowerLaw(-2.0), n).unwrap();
    // x_i = N·i^{-2}... here v_i = 1/(N·i^{-2}) so x_i = N/i².
    let x: Vec<f64> = (1..=n).map(|i| n as f64 / (i * i) as f64).collect();
    let sum: f64 = x.iter().sum();
    let m = zero_energy_moments(&p, 3.0).unwrap();
    for (k, xi) in x.iter().enumerate() {
        let expected = 6.0 * (xi / sum).powi(3);
        assert!((m.per_component[k] - expected).abs() <= 1e-12 * expected);
    }
}
