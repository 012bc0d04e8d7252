//! Monte Carlo estimates of eigenvector moments and component laws.
//!
//! Realization `r` of a size-`N` run draws from the ChaCha8 stream
//! `(N << 32) | r` of the generator seeded with the master seed, so results
//! depend only on `(seed, N, r)` and not on the worker count. Per-realization
//! sums are merged in index order with compensated summation.

use dgue_core::stats::{
    compensated_sum, fit_loglog_unweighted, ks_critical_value, ks_distance_exponential,
    CompensatedSum,
};
use dgue_core::{
    build_profile, component_law, density_of_states, solve_saddle, DeformationProfile, Family,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::ensemble::{EigenRoute, WindowPolicy};
use crate::ensemble::{eigenpairs_near, sample_gue, EigenSystem};
use crate::{Error, Result};

/// Cluster-bootstrap resamples used for [`MomentEstimate::bootstrap_std_error`].
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Stream offset reserved for the bootstrap generator of a size-`N` run.
const BOOTSTRAP_STREAM: u64 = 0xFFFF_FFFF;

/// Generator for realization `r` of a size-`n` run.
pub fn realization_rng(seed: u64, n: usize, r: u64) -> ChaCha8Rng {
    assert!(r < BOOTSTRAP_STREAM, "realization index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | r);
    rng
}

/// Realizations per size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealizationSchedule {
    Fixed(usize),
    /// 500 up to `N = 512`, 250 at 1024, 100 from 2048, linear in `ln N`
    /// between the anchors.
    Default,
}

impl RealizationSchedule {
    pub fn count(&self, n: usize) -> usize {
        match *self {
            RealizationSchedule::Fixed(r) => r,
            RealizationSchedule::Default => {
                const ANCHORS: [(f64, f64); 3] = [(512.0, 500.0), (1024.0, 250.0), (2048.0, 100.0)];
                let x = n as f64;
                if x <= ANCHORS[0].0 {
                    return ANCHORS[0].1 as usize;
                }
                for pair in ANCHORS.windows(2) {
                    let ((x0, r0), (x1, r1)) = (pair[0], pair[1]);
                    if x <= x1 {
                        let f = (x / x0).ln() / (x1 / x0).ln();
                        return (r0 + f * (r1 - r0)).round() as usize;
                    }
                }
                ANCHORS[2].1 as usize
            }
        }
    }
}

/// Moment estimate at one size and order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub q: f64,
    pub energy: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Mean of `Σ_n |ψ_n|^{2q}` over all selected eigenvectors.
    pub total_iq: f64,
    /// Standard error of the ratio estimator, clustered by realization.
    pub std_error: f64,
    /// Cluster-bootstrap standard error, reported as a cross-check.
    pub bootstrap_std_error: f64,
    /// Selected eigenvectors across all realizations.
    pub samples_used: usize,
    pub realizations: usize,
    /// Realizations whose window held no eigenvalue.
    pub skipped: usize,
    pub window: WindowPolicy,
    pub route: EigenRoute,
    pub seed: u64,
}

/// Input of [`estimate_moments`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRun {
    pub family: Family,
    pub n: usize,
    pub energy: f64,
    pub qs: Vec<f64>,
    pub realizations: usize,
    /// `None` selects [`WindowPolicy::default_for`].
    pub window: Option<WindowPolicy>,
    /// `None` selects [`EigenRoute::for_profile`].
    pub route: Option<EigenRoute>,
    pub seed: u64,
}

/// Per-realization sums for each `q`.
struct Cluster {
    selected: usize,
    sums: Vec<f64>,
}

fn validate_orders(qs: &[f64]) -> Result<()> {
    if qs.is_empty() {
        return Err(Error::Config("at least one moment order q is required".into()));
    }
    for &q in qs {
        if !(q > 0.0 && q.is_finite()) {
            return Err(dgue_core::Error::InvalidMomentOrder(q).into());
        }
    }
    Ok(())
}

/// Runs `f` on a pool of at most `threads` workers (`0` means the rayon
/// default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Diagonalizes every realization in parallel and returns the selected
/// eigenpairs' reduction `reduce(&system)` in realization order.
fn for_each_realization<T: Send>(
    profile: &DeformationProfile,
    energy: f64,
    realizations: usize,
    window: WindowPolicy,
    route: EigenRoute,
    seed: u64,
    reduce: impl Fn(&EigenSystem) -> T + Sync,
) -> Result<Vec<T>> {
    let n = profile.size();
    (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = realization_rng(seed, n, r);
            let h_tilde = sample_gue(n, &mut rng)?;
            let system = eigenpairs_near(&h_tilde, profile, energy, window, route)?;
            Ok(reduce(&system))
        })
        .collect()
}

/// Estimates the moments `I_q = ⟨Σ_n |ψ_n|^{2q}⟩` for eigenvectors near
/// `energy`, one estimate per entry of `run.qs`.
pub fn estimate_moments(run: &MomentRun) -> Result<Vec<MomentEstimate>> {
    validate_orders(&run.qs)?;
    if run.realizations == 0 {
        return Err(Error::Config("realizations must be at least 1".into()));
    }
    if !run.energy.is_finite() {
        return Err(Error::Config("energy must be finite".into()));
    }
    let profile = build_profile(&run.family, run.n)?;
    let window = run.window.unwrap_or_else(|| WindowPolicy::default_for(run.n));
    window.validate()?;
    let route = run.route.unwrap_or_else(|| EigenRoute::for_profile(&profile));

    let qs = &run.qs;
    let clusters = for_each_realization(
        &profile,
        run.energy,
        run.realizations,
        window,
        route,
        run.seed,
        |system| Cluster {
            selected: system.len(),
            sums: qs
                .iter()
                .map(|&q| {
                    compensated_sum(system.vectors().map(|v| {
                        compensated_sum(v.iter().map(|z| z.norm_sqr().powf(q)))
                    }))
                })
                .collect(),
        },
    )?;

    let used: Vec<&Cluster> = clusters.iter().filter(|c| c.selected > 0).collect();
    if used.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let skipped = clusters.len() - used.len();
    let samples_used: usize = used.iter().map(|c| c.selected).sum();
    let counts: Vec<f64> = used.iter().map(|c| c.selected as f64).collect();

    let mut boot_rng = ChaCha8Rng::seed_from_u64(run.seed);
    boot_rng.set_stream(((run.n as u64) << 32) | BOOTSTRAP_STREAM);
    let draws: Vec<usize> = (0..BOOTSTRAP_RESAMPLES * used.len())
        .map(|_| boot_rng.random_range(0..used.len()))
        .collect();

    Ok(qs
        .iter()
        .enumerate()
        .map(|(iq, &q)| {
            let sums: Vec<f64> = used.iter().map(|c| c.sums[iq]).collect();
            let (total_iq, std_error) = ratio_estimate(&sums, &counts);
            let bootstrap_std_error = bootstrap_std_error(&sums, &counts, &draws);
            MomentEstimate {
                q,
                energy: run.energy,
                n: run.n,
                total_iq,
                std_error,
                bootstrap_std_error,
                samples_used,
                realizations: run.realizations,
                skipped,
                window,
                route,
                seed: run.seed,
            }
        })
        .collect())
}

/// Ratio estimator `ΣS/Σm` with the cluster (linearization) standard error
/// `√(R/(R−1)·Σ(S_r − Ī·m_r)²)/Σm`.
fn ratio_estimate(sums: &[f64], counts: &[f64]) -> (f64, f64) {
    let total = compensated_sum(counts.iter().copied());
    let mean = compensated_sum(sums.iter().copied()) / total;
    let r = sums.len() as f64;
    if sums.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(sums.iter().zip(counts).map(|(s, m)| {
        let d = s - mean * m;
        d * d
    }));
    (mean, (r / (r - 1.0) * ss).sqrt() / total)
}

fn bootstrap_std_error(sums: &[f64], counts: &[f64], draws: &[usize]) -> f64 {
    let r = sums.len();
    let ratios: Vec<f64> = draws
        .chunks_exact(r)
        .map(|idx| {
            let mut s = CompensatedSum::new();
            let mut m = CompensatedSum::new();
            for &i in idx {
                s.add(sums[i]);
                m.add(counts[i]);
            }
            s.value() / m.value()
        })
        .collect();
    let b = ratios.len() as f64;
    let mean = compensated_sum(ratios.iter().copied()) / b;
    let var = compensated_sum(ratios.iter().map(|x| (x - mean) * (x - mean))) / (b - 1.0);
    var.sqrt()
}

/// Finite-size scan of one moment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub q: f64,
    pub sizes: Vec<usize>,
    pub estimates: Vec<MomentEstimate>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

/// Input of [`scan_sizes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRun {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub energy: f64,
    pub qs: Vec<f64>,
    pub schedule: RealizationSchedule,
    /// `None` selects [`WindowPolicy::default_for`] at each size.
    pub window: Option<WindowPolicy>,
    pub seed: u64,
}

/// Estimates the moments at every size and fits
/// `ln I_q = intercept + slope·ln N` by ordinary least squares, one result
/// per order in `run.qs`. All orders share the same realizations.
pub fn scan_sizes(run: &ScanRun) -> Result<Vec<ScanResult>> {
    validate_orders(&run.qs)?;
    if run.sizes.len() < 3 {
        return Err(dgue_core::Error::TooFewPoints { needed: 3, got: run.sizes.len() }.into());
    }
    if !run.sizes.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config("sizes must be strictly ascending".into()));
    }
    let per_size = run
        .sizes
        .iter()
        .map(|&n| {
            estimate_moments(&MomentRun {
                family: run.family.clone(),
                n,
                energy: run.energy,
                qs: run.qs.clone(),
                realizations: run.schedule.count(n),
                window: run.window,
                route: None,
                seed: run.seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    run.qs
        .iter()
        .enumerate()
        .map(|(iq, &q)| {
            let estimates: Vec<MomentEstimate> = per_size.iter().map(|e| e[iq].clone()).collect();
            let points: Vec<(f64, f64, f64)> =
                estimates.iter().map(|e| (e.n as f64, e.total_iq, e.std_error)).collect();
            let fit = fit_loglog_unweighted(&points)?;
            Ok(ScanResult {
                q,
                sizes: run.sizes.clone(),
                estimates,
                slope: fit.slope,
                slope_stderr: fit.slope_stderr,
                intercept: fit.intercept,
            })
        })
        .collect()
}

/// `d_q = −slope/(q − 1)` with its propagated standard error.
pub fn fractal_dimension(scan: &ScanResult) -> Result<(f64, f64)> {
    Ok(dgue_core::fractal_dimension(scan.slope, scan.slope_stderr, scan.q)?)
}

/// Minimum number of component samples for [`distribution_check`].
pub const MIN_DISTRIBUTION_SAMPLES: usize = 100;

/// Comparison of sampled `|ψ_n|²` with the predicted exponential law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCheck {
    /// One-based component index.
    pub component: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub energy: f64,
    pub samples: usize,
    pub ks_distance: f64,
    /// KS critical distance at the 1% level for `samples`.
    pub ks_critical: f64,
    pub rate_theory: f64,
    /// `1/mean(x)`.
    pub rate_empirical: f64,
    /// `rate_empirical/√samples`.
    pub rate_stderr: f64,
    pub window: WindowPolicy,
    pub route: EigenRoute,
    pub seed: u64,
}

impl DistributionCheck {
    pub fn ks_passes(&self) -> bool {
        self.ks_distance <= self.ks_critical
    }

    /// `|rate_empirical − rate_theory| ≤ sigmas·rate_stderr`.
    pub fn rate_within(&self, sigmas: f64) -> bool {
        (self.rate_empirical - self.rate_theory).abs() <= sigmas * self.rate_stderr
    }
}

/// Input of [`distribution_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRun {
    pub family: Family,
    pub n: usize,
    pub energy: f64,
    /// One-based component index.
    pub component: usize,
    pub realizations: usize,
    pub window: Option<WindowPolicy>,
    pub seed: u64,
}

pub fn distribution_check(run: &DistributionRun) -> Result<DistributionCheck> {
    if run.realizations == 0 {
        return Err(Error::Config("realizations must be at least 1".into()));
    }
    let profile = build_profile(&run.family, run.n)?;
    if run.component == 0 || run.component > run.n {
        return Err(dgue_core::Error::IndexOutOfRange { index: run.component, size: run.n }.into());
    }
    let saddle = solve_saddle(&profile, run.energy)?;
    let rho = density_of_states(&profile, &saddle);
    let law = component_law(&profile, &saddle, &rho, run.component)?;

    let window = run.window.unwrap_or_else(|| WindowPolicy::default_for(run.n));
    window.validate()?;
    let route = EigenRoute::for_profile(&profile);
    let idx = run.component - 1;
    let per_realization = for_each_realization(
        &profile,
        run.energy,
        run.realizations,
        window,
        route,
        run.seed,
        |system| system.vectors().map(|v| v[idx].norm_sqr()).collect::<Vec<f64>>(),
    )?;
    let mut samples: Vec<f64> = per_realization.into_iter().flatten().collect();
    if samples.len() < MIN_DISTRIBUTION_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_DISTRIBUTION_SAMPLES, got: samples.len() });
    }
    let m = samples.len();
    let mean = compensated_sum(samples.iter().copied()) / m as f64;
    let rate_empirical = 1.0 / mean;
    let ks_distance = ks_distance_exponential(&mut samples, law.rate);
    Ok(DistributionCheck {
        component: run.component,
        n: run.n,
        energy: run.energy,
        samples: m,
        ks_distance,
        ks_critical: ks_critical_value(m, 0.01),
        rate_theory: law.rate,
        rate_empirical,
        rate_stderr: rate_empirical / (m as f64).sqrt(),
        window,
        route,
        seed: run.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_anchors() {
        let s = RealizationSchedule::Default;
        assert_eq!(s.count(128), 500);
        assert_eq!(s.count(512), 500);
        assert_eq!(s.count(1024), 250);
        assert_eq!(s.count(2048), 100);
        assert_eq!(s.count(4096), 100);
        let mid = s.count(724);
        assert!(mid > 250 && mid < 500);
        assert_eq!(RealizationSchedule::Fixed(7).count(2048), 7);
    }

    #[test]
    fn ratio_estimator_matches_hand_computation() {
        let (mean, se) = ratio_estimate(&[2.0, 4.0], &[1.0, 1.0]);
        assert_eq!(mean, 3.0);
        // R/(R−1)·((2−3)² + (4−3)²) / 2² = 2·2/4 = 1.
        assert!((se - 1.0).abs() < 1e-15);
        assert_eq!(ratio_estimate(&[5.0], &[2.0]), (2.5, 0.0));
    }

    #[test]
    fn streams_differ_by_size_and_index() {
        let a: u64 = realization_rng(1, 64, 0).random();
        let b: u64 = realization_rng(1, 64, 1).random();
        let c: u64 = realization_rng(1, 128, 0).random();
        let a2: u64 = realization_rng(1, 64, 0).random();
        assert_eq!(a, a2);
        assert!(a != b && a != c && b != c);
    }

    fn run(family: Family, n: usize, qs: Vec<f64>, realizations: usize) -> MomentRun {
        MomentRun { family, n, energy: 0.0, qs, realizations, window: None, route: None, seed: 11 }
    }

    #[test]
    fn unit_order_is_exactly_normalized() {
        for family in [Family::Constant, Family::PowerLaw(-0.5), Family::Exponential(2.0)] {
            let est = estimate_moments(&run(family, 40, vec![1.0], 6)).unwrap();
            assert!((est[0].total_iq - 1.0).abs() < 1e-10);
            assert!(est[0].samples_used >= est[0].realizations);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let r = run(Family::PowerLaw(-0.5), 48, vec![1.5, 2.0], 9);
        let one = with_threads(1, || estimate_moments(&r)).unwrap().unwrap();
        let three = with_threads(3, || estimate_moments(&r)).unwrap().unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn empty_window_is_reported() {
        let mut r = run(Family::Constant, 32, vec![2.0], 3);
        r.energy = 10.0;
        r.window = Some(WindowPolicy::EnergyHalfWidth(0.01));
        assert!(matches!(estimate_moments(&r), Err(Error::EmptyWindow)));
    }

    #[test]
    fn invalid_inputs() {
        assert!(estimate_moments(&run(Family::Constant, 32, vec![0.0], 3)).is_err());
        assert!(estimate_moments(&run(Family::Constant, 32, vec![2.0], 0)).is_err());
        assert!(estimate_moments(&run(Family::Constant, 32, vec![], 3)).is_err());
        let scan = ScanRun {
            family: Family::Constant,
            sizes: vec![16, 32],
            energy: 0.0,
            qs: vec![2.0],
            schedule: RealizationSchedule::Fixed(2),
            window: None,
            seed: 0,
        };
        assert!(scan_sizes(&scan).is_err());
        let scan = ScanRun { sizes: vec![32, 16, 64], ..scan };
        assert!(scan_sizes(&scan).is_err());
    }

    #[test]
    fn too_few_distribution_samples() {
        let r = DistributionRun {
            family: Family::Constant,
            n: 32,
            energy: 0.0,
            component: 1,
            realizations: 10,
            window: None,
            seed: 1,
        };
        assert!(matches!(
            distribution_check(&r),
            Err(Error::InsufficientSamples { needed: 100, got: 10 })
        ));
    }

    #[test]
    fn fractal_dimension_from_scan() {
        let scan = ScanResult {
            q: 2.2,
            sizes: vec![],
            estimates: vec![],
            slope: -1.1,
            slope_stderr: 0.12,
            intercept: 0.0,
        };
        let (d, se) = fractal_dimension(&scan).unwrap();
        assert!((d - 1.1 / 1.2).abs() < 1e-15);
        assert!((se - 0.1).abs() < 1e-15);
        assert!(fractal_dimension(&ScanResult { q: 1.0, ..scan }).is_err());
    }
}
