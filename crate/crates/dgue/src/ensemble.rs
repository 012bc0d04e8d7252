//! GUE sampling, the deformation `H = W·H̃·W`, and Hermitian diagonalization.
//!
//! Matrices are dense and column-major. Three eigen-solvers are provided:
//!
//! - [`eigensystem`]: the full decomposition (divide and conquer).
//! - [`eigenpairs_near`] with [`EigenRoute::Direct`]: tridiagonal reduction,
//!   all eigenvalues, then eigenvectors only for the selected window.
//! - [`eigenpairs_near`] with [`EigenRoute::ShiftInvert`]: the same applied to
//!   `(H − E)⁻¹ = W⁻¹(H̃ − E·W⁻²)⁻¹W⁻¹`. Needed for strongly graded profiles,
//!   whose eigenvalues near `E` are far below `ε‖H‖`.

use dgue_core::DeformationProfile;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::lapack;
use crate::{Error, Result};

pub type C64 = Complex64;

/// Dynamic range of `v` above which [`EigenRoute::for_profile`] picks the
/// shift-invert route.
pub const GRADED_DYNAMIC_RANGE: f64 = 1e8;

/// Dense Hermitian matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    /// Builds the matrix from its lower triangle (`i ≥ j`); the upper
    /// triangle is the conjugate mirror and the diagonal is made real.
    pub fn from_lower(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = vec![C64::default(); n * n];
        for j in 0..n {
            data[j + j * n] = C64::new(f(j, j).re, 0.0);
            for i in j + 1..n {
                let z = f(i, j);
                data[i + j * n] = z;
                data[j + i * n] = z.conj();
            }
        }
        Self { n, data }
    }

    /// Wraps column-major data, rejecting a Hermiticity defect above `1e-12`.
    pub fn from_column_major(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        let m = Self { n, data };
        let defect = m.hermiticity_defect();
        if !(defect <= 1e-12) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut data = vec![C64::default(); n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, &x) in row.iter().enumerate() {
                data[i + j * n] = C64::new(x, 0.0);
            }
        }
        Self::from_column_major(n, data)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i + j * self.n]
    }

    pub fn as_column_major(&self) -> &[C64] {
        &self.data
    }

    /// `max |H_ij − conj(H_ji)|`, including the imaginary parts of the diagonal.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n;
        let mut defect = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.data[i + j * n] - self.data[j + i * n].conj()).norm();
                defect = defect.max(d);
            }
        }
        defect
    }

    /// `H·x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut y = vec![C64::default(); n];
        for (j, &xj) in x.iter().enumerate() {
            let col = &self.data[j * n..(j + 1) * n];
            for (yi, &a) in y.iter_mut().zip(col) {
                *yi += a * xj;
            }
        }
        y
    }
}

/// Draws a GUE matrix: diagonal `N(0, 1/N)`, off-diagonal real and imaginary
/// parts each `N(0, 1/(2N))`.
///
/// Entries are drawn column by column down the lower triangle, diagonal
/// first, real part before imaginary part.
pub fn sample_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HermitianMatrix> {
    if n < 2 {
        return Err(dgue_core::Error::SizeTooSmall(n).into());
    }
    let diag_sd = (1.0 / n as f64).sqrt();
    let off_sd = (0.5 / n as f64).sqrt();
    Ok(HermitianMatrix::from_lower(n, |i, j| {
        if i == j {
            C64::new(diag_sd * rng.sample::<f64, _>(StandardNormal), 0.0)
        } else {
            let re = off_sd * rng.sample::<f64, _>(StandardNormal);
            let im = off_sd * rng.sample::<f64, _>(StandardNormal);
            C64::new(re, im)
        }
    }))
}

/// `H_ij = w_i·H̃_ij·w_j` with `w = √v`.
pub fn deform(h: &HermitianMatrix, profile: &DeformationProfile) -> Result<HermitianMatrix> {
    let n = h.dim();
    if profile.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: profile.size() });
    }
    let w: Vec<f64> = profile.weights().collect();
    let out = HermitianMatrix::from_lower(n, |i, j| h.get(i, j) * (w[i] * w[j]));
    debug_assert_eq!(out.hermiticity_defect(), 0.0);
    Ok(out)
}

/// Eigenpairs of a Hermitian matrix: ascending values with orthonormal
/// eigenvectors stored as the columns of an `N × m` column-major block.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    n: usize,
    values: Vec<f64>,
    vectors: Vec<C64>,
}

impl EigenSystem {
    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of eigenpairs held.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, k: usize) -> &[C64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[C64]> {
        self.vectors.chunks_exact(self.n)
    }

    /// Rotates every eigenvector so that its largest-modulus component is
    /// real and positive.
    pub fn canonicalize_phases(&mut self) {
        for v in self.vectors.chunks_exact_mut(self.n) {
            canonicalize_phase(v);
        }
    }

    /// `max_k ‖H·ψ_k − λ_k·ψ_k‖`.
    pub fn max_residual(&self, h: &HermitianMatrix) -> f64 {
        self.vectors()
            .zip(&self.values)
            .map(|(v, &lambda)| {
                let hv = h.apply(v);
                hv.iter().zip(v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max_{j,k} |⟨ψ_j, ψ_k⟩ − δ_jk|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (j, a) in self.vectors().enumerate() {
            for (k, b) in self.vectors().enumerate().skip(j) {
                let dot: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// Multiplies `v` by the unit phase that makes its largest-modulus component
/// real and positive. The first maximal component wins ties.
pub fn canonicalize_phase(v: &mut [C64]) {
    let mut best = 0.0;
    let mut pivot = C64::default();
    for &z in v.iter() {
        let m = z.norm_sqr();
        if m > best {
            best = m;
            pivot = z;
        }
    }
    if best > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Full eigendecomposition.
pub fn eigensystem(h: &HermitianMatrix) -> Result<EigenSystem> {
    let defect = h.hermiticity_defect();
    if !(defect <= 1e-12) {
        return Err(Error::NotHermitian { defect });
    }
    let n = h.dim();
    let mut a = h.data.clone();
    let values = lapack::heevd(&mut a, n)?;
    let out = EigenSystem { n, values, vectors: a };
    ensure_finite(&out)?;
    Ok(out)
}

/// All eigenvalues, ascending, without eigenvectors.
pub fn eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let defect = h.hermiticity_defect();
    if !(defect <= 1e-12) {
        return Err(Error::NotHermitian { defect });
    }
    let values = lapack::hetrd(h.data.clone(), h.dim())?.eigenvalues()?;
    if values.iter().all(|v| v.is_finite()) {
        Ok(values)
    } else {
        Err(Error::NonFinite("eigenvalues"))
    }
}

/// Which eigenvalues near a target energy enter an estimate.
///
/// Written as `nearest_k:<k>` or `halfwidth:<δ>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum WindowPolicy {
    /// The `k` eigenvalues closest to the target.
    NearestK(usize),
    /// All eigenvalues within `δ` of the target.
    EnergyHalfWidth(f64),
}

impl WindowPolicy {
    /// `nearest_k(⌈0.02·N⌉)`.
    pub fn default_for(n: usize) -> Self {
        WindowPolicy::NearestK((n as f64 * 0.02).ceil().max(1.0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowPolicy::NearestK(0) => Err(Error::Config("nearest_k window needs k ≥ 1".into())),
            WindowPolicy::EnergyHalfWidth(d) if !(d > 0.0 && d.is_finite()) => {
                Err(Error::Config(format!("energy half-width must be positive, got {d}")))
            }
            _ => Ok(()),
        }
    }

    /// Index range of the selected values within an ascending spectrum.
    fn select_sorted(&self, values: &[f64], energy: f64) -> std::ops::Range<usize> {
        match *self {
            WindowPolicy::NearestK(k) => {
                let k = k.min(values.len());
                let mut lo = values.partition_point(|&x| x < energy);
                let mut hi = lo;
                while hi - lo < k {
                    let take_left = match (lo.checked_sub(1), values.get(hi)) {
                        (Some(l), Some(&r)) => energy - values[l] <= r - energy,
                        (Some(_), None) => true,
                        _ => false,
                    };
                    if take_left {
                        lo -= 1;
                    } else {
                        hi += 1;
                    }
                }
                lo..hi
            }
            WindowPolicy::EnergyHalfWidth(d) => {
                let lo = values.partition_point(|&x| x < energy - d);
                let hi = values.partition_point(|&x| x <= energy + d);
                lo..hi
            }
        }
    }
}

impl fmt::Display for WindowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowPolicy::NearestK(k) => write!(f, "nearest_k:{k}"),
            WindowPolicy::EnergyHalfWidth(d) => write!(f, "halfwidth:{d}"),
        }
    }
}

impl FromStr for WindowPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("window must be nearest_k:<k> or halfwidth:<δ>, got {s:?}"));
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        let policy = match kind.trim() {
            "nearest_k" => WindowPolicy::NearestK(arg.trim().parse().map_err(|_| bad())?),
            "halfwidth" => WindowPolicy::EnergyHalfWidth(arg.trim().parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl From<WindowPolicy> for String {
    fn from(w: WindowPolicy) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for WindowPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Eigen-solver used to extract eigenpairs near a target energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenRoute {
    Direct,
    ShiftInvert,
}

impl EigenRoute {
    /// Shift-invert when `max v / min v` exceeds [`GRADED_DYNAMIC_RANGE`].
    pub fn for_profile(profile: &DeformationProfile) -> Self {
        if profile.dynamic_range() > GRADED_DYNAMIC_RANGE {
            EigenRoute::ShiftInvert
        } else {
            EigenRoute::Direct
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EigenRoute::Direct => "direct",
            EigenRoute::ShiftInvert => "shift_invert",
        }
    }
}

/// Eigenpairs of `H = W·H̃·W` near `energy` selected by `window`, in
/// ascending order of eigenvalue. May be empty for an energy half-width.
pub fn eigenpairs_near(
    h_tilde: &HermitianMatrix,
    profile: &DeformationProfile,
    energy: f64,
    window: WindowPolicy,
    route: EigenRoute,
) -> Result<EigenSystem> {
    window.validate()?;
    let n = h_tilde.dim();
    if profile.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: profile.size() });
    }
    let out = match route {
        EigenRoute::Direct => {
            let h = deform(h_tilde, profile)?;
            let tri = lapack::hetrd(h.data, n)?;
            let all = tri.eigenvalues()?;
            let range = window.select_sorted(&all, energy);
            if range.is_empty() {
                EigenSystem { n, values: Vec::new(), vectors: Vec::new() }
            } else {
                let (values, vectors) = tri.eigenpairs(range.start, range.end - 1)?;
                EigenSystem { n, values, vectors }
            }
        }
        EigenRoute::ShiftInvert => shift_invert(h_tilde, profile, energy, window)?,
    };
    ensure_finite(&out)?;
    Ok(out)
}

fn shift_invert(
    h_tilde: &HermitianMatrix,
    profile: &DeformationProfile,
    energy: f64,
    window: WindowPolicy,
) -> Result<EigenSystem> {
    let n = h_tilde.dim();
    let w: Vec<f64> = profile.weights().collect();
    let x: Vec<f64> = profile.inverse_values().collect();
    // Reorder so the largest entries of the inverse lead the reduction.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));

    let mut b = HermitianMatrix::from_lower(n, |i, j| {
        let (pi, pj) = (order[i], order[j]);
        let z = h_tilde.get(pi, pj);
        if i == j {
            z - energy * x[pi]
        } else {
            z
        }
    })
    .data;
    lapack::inverse(&mut b, n)?;
    for j in 0..n {
        for i in 0..n {
            b[i + j * n] /= w[order[i]] * w[order[j]];
        }
    }
    if b.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("shift-invert operator"));
    }

    let tri = lapack::hetrd(b, n)?;
    let mu = tri.eigenvalues()?;
    // The largest |μ| sit at both ends of the ascending spectrum.
    let (neg, pos) = match window {
        WindowPolicy::NearestK(k) => {
            let k = k.min(n);
            let (mut lo, mut hi) = (0usize, n);
            while lo + (n - hi) < k {
                if -mu[lo] >= mu[hi - 1] {
                    lo += 1;
                } else {
                    hi -= 1;
                }
            }
            (lo, n - hi)
        }
        WindowPolicy::EnergyHalfWidth(d) => {
            let cut = 1.0 / d;
            (mu.partition_point(|&m| m <= -cut), n - mu.partition_point(|&m| m < cut))
        }
    };
    let (neg, pos) = if neg + pos > n { (neg, n - neg) } else { (neg, pos) };

    let mut pairs: Vec<(f64, Vec<C64>)> = Vec::with_capacity(neg + pos);
    let mut collect = |lo: usize, hi: usize| -> Result<()> {
        let (vals, vecs) = tri.eigenpairs(lo, hi)?;
        for (k, &m) in vals.iter().enumerate() {
            let mut v = vec![C64::default(); n];
            for (i, &z) in vecs[k * n..(k + 1) * n].iter().enumerate() {
                v[order[i]] = z;
            }
            pairs.push((energy + 1.0 / m, v));
        }
        Ok(())
    };
    if neg > 0 {
        collect(0, neg - 1)?;
    }
    if pos > 0 {
        collect(n - pos, n - 1)?;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = pairs.into_iter().flat_map(|p| p.1).collect();
    Ok(EigenSystem { n, values, vectors })
}

fn ensure_finite(sys: &EigenSystem) -> Result<()> {
    let ok = sys.values.iter().all(|v| v.is_finite())
        && sys.vectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::NonFinite("eigen-decomposition"))
    }
}

/// Agreement between the standard problem for `W·H̃·W` and the generalized
/// problem `H̃·g = E·A·g` with `A = W⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// `max_k |E_gen,k − E_std,k|` over the sorted spectra.
    pub max_eigenvalue_gap: f64,
    /// Largest angle (radians) between `f = A^{1/2}·g` and the standard
    /// eigenvector, over non-degenerate eigenvalues.
    pub max_vector_angle: f64,
    pub compared_vectors: usize,
    pub skipped_degenerate: usize,
}

/// Eigenvalues closer than this are treated as one cluster whose
/// eigenvectors are not compared.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

pub fn generalized_equivalence_check(
    h_tilde: &HermitianMatrix,
    profile: &DeformationProfile,
) -> Result<EquivalenceReport> {
    let n = h_tilde.dim();
    if profile.size() != n {
        return Err(Error::DimensionMismatch { expected: n, got: profile.size() });
    }
    let standard = eigensystem(&deform(h_tilde, profile)?)?;

    let mut a = h_tilde.data.clone();
    let mut b = vec![C64::default(); n * n];
    for (i, x) in profile.inverse_values().enumerate() {
        b[i + i * n] = C64::new(x, 0.0);
    }
    let gen_values = lapack::hegv(&mut a, &mut b, n)?;
    let a_half: Vec<f64> = profile.inverse_values().map(f64::sqrt).collect();

    let max_eigenvalue_gap = gen_values
        .iter()
        .zip(standard.values())
        .map(|(g, s)| (g - s).abs())
        .fold(0.0, f64::max);

    let values = standard.values();
    let mut max_vector_angle = 0.0f64;
    let mut compared_vectors = 0;
    let mut skipped_degenerate = 0;
    for k in 0..n {
        let isolated = (k == 0 || values[k] - values[k - 1] > DEGENERACY_THRESHOLD)
            && (k + 1 == n || values[k + 1] - values[k] > DEGENERACY_THRESHOLD);
        if !isolated {
            skipped_degenerate += 1;
            continue;
        }
        let psi = standard.vector(k);
        let f: Vec<C64> = a[k * n..(k + 1) * n].iter().zip(&a_half).map(|(g, s)| g * s).collect();
        let overlap: C64 = psi.iter().zip(&f).map(|(p, q)| p.conj() * q).sum();
        let perp = psi
            .iter()
            .zip(&f)
            .map(|(p, q)| (q - p * overlap).norm_sqr())
            .sum::<f64>()
            .sqrt();
        max_vector_angle = max_vector_angle.max(perp.atan2(overlap.norm()));
        compared_vectors += 1;
    }
    Ok(EquivalenceReport { max_eigenvalue_gap, max_vector_angle, compared_vectors, skipped_degenerate })
}
