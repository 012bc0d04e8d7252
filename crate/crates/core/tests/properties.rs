use dgue_core::meanfield::residuals;
use dgue_core::special::gamma;
use dgue_core::{
    build_profile, component_law, density_of_states, gue_closed_form, moment_prediction,
    scaling_regime, solve_saddle, zero_energy_moments, Error, Family, ScalingFamily,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Constant),
        (-0.95f64..-0.05).prop_map(Family::PowerLaw),
        (0.05f64..1.5).prop_map(Family::PowerLaw),
        (-3.0f64..-1.05).prop_map(Family::PowerLaw),
        (1.05f64..3.0).prop_map(Family::Exponential),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_profile_is_pure(f in family(), n in 2usize..300) {
        let a = build_profile(&f, n).unwrap();
        let b = build_profile(&f, n).unwrap();
        prop_assert_eq!(a.size(), n);
        prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(a.values().iter().all(|v| *v > 0.0 && v.is_finite()));
    }

    #[test]
    fn constant_profile_validity_ratio(n in 2usize..5000) {
        let p = build_profile(&Family::Constant, n).unwrap();
        let r = dgue_core::validity_ratio(&p, 1.0 / PI).unwrap();
        prop_assert!(rel(r, PI / n as f64) < 1e-14);
    }

    #[test]
    fn gue_recovery(e in -1.95f64..1.95, n in 2usize..200) {
        let p = build_profile(&Family::Constant, n).unwrap();
        let sp = solve_saddle(&p, e).unwrap();
        let gue = gue_closed_form(e).unwrap();
        prop_assert!((sp.t - gue.t).abs() < 1e-10);
        prop_assert!((sp.s - gue.s).abs() < 1e-10);
    }

    #[test]
    fn saddle_residuals_and_symmetry(p in -0.9f64..1.0, n in 50usize..400, e in 0.0f64..0.6) {
        let profile = build_profile(&Family::PowerLaw(p), n).unwrap();
        let sp = solve_saddle(&profile, e).unwrap();
        prop_assert!(sp.s > 0.0);
        let [r1, r2] = residuals(&profile, e, sp.t, sp.s);
        prop_assert!(r1.abs().max(r2.abs()) <= 1e-10);
        let mirror = solve_saddle(&profile, -e).unwrap();
        prop_assert!((mirror.t + sp.t).abs() < 1e-10);
        prop_assert!((mirror.s - sp.s).abs() < 1e-10);
    }

    #[test]
    fn zero_energy_consistency(f in family(), n in 2usize..600, q in 0.2f64..4.0) {
        let p = build_profile(&f, n).unwrap();
        let sp = solve_saddle(&p, 0.0).unwrap();
        let rho = density_of_states(&p, &sp);
        let general = moment_prediction(&p, &sp, &rho, q).unwrap();
        let closed = zero_energy_moments(&p, q).unwrap();
        for (a, b) in general.per_component.iter().zip(&closed.per_component) {
            if a.max(*b) >= f64::MIN_POSITIVE {
                prop_assert!(rel(*a, *b) < 1e-12, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn normalization_and_law_consistency(p in -0.9f64..0.9, n in 20usize..400, e in -0.5f64..0.5) {
        let profile = build_profile(&Family::PowerLaw(p), n).unwrap();
        let sp = solve_saddle(&profile, e).unwrap();
        let rho = density_of_states(&profile, &sp);
        let m1 = moment_prediction(&profile, &sp, &rho, 1.0).unwrap();
        prop_assert!((m1.total - 1.0).abs() < 1e-10);
        for q in [1.0, 1.5, 2.0, 3.0] {
            let m = moment_prediction(&profile, &sp, &rho, q).unwrap();
            for k in [1, n / 2, n] {
                let law = component_law(&profile, &sp, &rho, k).unwrap();
                prop_assert!(rel(law.moment(q), m.per_component[k - 1]) < 1e-12);
            }
        }
    }

    #[test]
    fn gue_moments_are_energy_independent(e in -1.9f64..1.9, n in 2usize..500, q in 0.5f64..4.0) {
        let p = build_profile(&Family::Constant, n).unwrap();
        let sp = solve_saddle(&p, e).unwrap();
        let rho = density_of_states(&p, &sp);
        let m = moment_prediction(&p, &sp, &rho, q).unwrap();
        let expected = gamma(q + 1.0) * (n as f64).powf(1.0 - q);
        prop_assert!(rel(m.total, expected) < 1e-10);
    }

    #[test]
    fn regime_exponent_is_continuous(p in -0.95f64..-0.05) {
        let threshold = -1.0 / p;
        let below = scaling_regime(ScalingFamily::PowerLaw(p), threshold * (1.0 - 1e-9)).unwrap();
        let above = scaling_regime(ScalingFamily::PowerLaw(p), threshold * (1.0 + 1e-9)).unwrap();
        prop_assert!((below.exponent - above.exponent).abs() < 1e-6);
    }

    #[test]
    fn regime_exponent_is_continuous_below_minus_one(p in -4.0f64..-1.05) {
        let threshold = -1.0 / p;
        let below = scaling_regime(ScalingFamily::PowerLaw(p), threshold * (1.0 - 1e-9)).unwrap();
        let above = scaling_regime(ScalingFamily::PowerLaw(p), threshold * (1.0 + 1e-9)).unwrap();
        prop_assert!((below.exponent - above.exponent).abs() < 1e-6);
    }

    #[test]
    fn dimension_matches_exponent(p in -4.0f64..2.0, q in 0.1f64..5.0) {
        prop_assume!((p + 1.0).abs() > 1e-3 && (q - 1.0).abs() > 1e-6);
        let law = scaling_regime(ScalingFamily::PowerLaw(p), q).unwrap();
        let d = law.d_q.unwrap();
        prop_assert!((d + law.exponent / (q - 1.0)).abs() < 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
    }
}

#[test]
fn density_integrates_to_one() {
    for family in [Family::Constant, Family::PowerLaw(-0.5), Family::PowerLaw(0.5)] {
        let p = build_profile(&family, 200).unwrap();
        let h = 2e-3;
        let mut guess = None;
        let mut integral = 0.0;
        let mut previous = 0.0;
        let steps = (40.0 / h) as usize;
        for k in 0..=steps {
            let e = -20.0 + k as f64 * h;
            let rho = match dgue_core::meanfield::solve_saddle_with(
                &p,
                e,
                &Default::default(),
                guess,
            ) {
                Ok(sp) => {
                    guess = Some((sp.t, sp.s));
                    density_of_states(&p, &sp).rho
                }
                Err(Error::NoBulkSolution { .. }) => {
                    guess = None;
                    0.0
                }
                Err(e) => panic!("{family:?}: {e}"),
            };
            if k > 0 {
                integral += 0.5 * h * (rho + previous);
            }
            previous = rho;
        }
        assert!((integral - 1.0).abs() < 1e-3, "{family:?}: ∫ρ = {integral}");
    }
}

#[test]
fn gue_density_is_semicircle() {
    let p = build_profile(&Family::Constant, 30).unwrap();
    for k in 0..41 {
        let e = -1.9 + 0.095 * k as f64;
        let sp = solve_saddle(&p, e).unwrap();
        let rho = density_of_states(&p, &sp).rho;
        assert!((rho - (1.0 - e * e / 4.0).sqrt() / PI).abs() < 1e-10);
    }
}
