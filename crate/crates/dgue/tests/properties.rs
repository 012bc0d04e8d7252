use dgue::ensemble::{
    deform, eigenpairs_near, eigensystem, sample_gue, EigenRoute, WindowPolicy,
};
use dgue::experiment::{realization_rng, RealizationSchedule};
use dgue_core::{build_profile, Family};
use proptest::prelude::*;

fn explicit(values: Vec<f64>) -> dgue_core::DeformationProfile {
    let n = values.len();
    build_profile(&Family::Explicit(values), n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deformation_is_hermitian_with_scaled_entries(
        seed in any::<u64>(),
        values in prop::collection::vec(0.01f64..100.0, 2..12),
    ) {
        let n = values.len();
        let h = sample_gue(n, &mut realization_rng(seed, n, 0)).unwrap();
        let d = deform(&h, &explicit(values.clone())).unwrap();
        prop_assert_eq!(d.hermiticity_defect(), 0.0);
        for i in 0..n {
            for j in 0..n {
                let expected = h.get(i, j) * (values[i] * values[j]).sqrt();
                prop_assert!((d.get(i, j) - expected).norm() <= 1e-14 * expected.norm().max(1.0));
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal(
        seed in any::<u64>(),
        values in prop::collection::vec(0.1f64..10.0, 2..16),
    ) {
        let n = values.len();
        let h = sample_gue(n, &mut realization_rng(seed, n, 0)).unwrap();
        let d = deform(&h, &explicit(values)).unwrap();
        let sys = eigensystem(&d).unwrap();
        prop_assert!(sys.orthonormality_defect() <= 1e-12);
        prop_assert!(sys.max_residual(&d) <= 1e-12);
        prop_assert!(sys.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn nearest_window_selects_the_closest_eigenvalues(
        seed in any::<u64>(),
        n in 4usize..24,
        k in 1usize..4,
        energy in -1.5f64..1.5,
    ) {
        let h = sample_gue(n, &mut realization_rng(seed, n, 1)).unwrap();
        let profile = build_profile(&Family::PowerLaw(-0.5), n).unwrap();
        let all = eigensystem(&deform(&h, &profile).unwrap()).unwrap();
        let near = eigenpairs_near(&h, &profile, energy, WindowPolicy::NearestK(k), EigenRoute::Direct)
            .unwrap();
        prop_assert_eq!(near.len(), k);
        let worst_inside = near.values().iter().map(|e| (e - energy).abs()).fold(0.0, f64::max);
        let outside = all
            .values()
            .iter()
            .filter(|e| !near.values().iter().any(|x| (*x - **e).abs() <= 1e-10))
            .map(|e| (e - energy).abs())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(worst_inside <= outside + 1e-10);
        for v in near.vectors() {
            let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn window_text_round_trips(k in 1usize..10_000, d in 1e-6f64..10.0) {
        for w in [WindowPolicy::NearestK(k), WindowPolicy::EnergyHalfWidth(d)] {
            let parsed: WindowPolicy = w.to_string().parse().unwrap();
            prop_assert_eq!(parsed, w);
        }
    }

    #[test]
    fn default_schedule_never_grows_with_n(a in 2usize..5000, b in 2usize..5000) {
        let (small, large) = (a.min(b), a.max(b));
        let schedule = RealizationSchedule::Default;
        prop_assert!(schedule.count(small) >= schedule.count(large));
        prop_assert!((100..=500).contains(&schedule.count(large)));
    }
}
