//! Linearized Green function and its deterministic approximation.
//!
//! With `X` of size `M × N`, the linearization
//!
//! ```text
//! H(z) = [ −Σ⁻¹   X  ]        G(z) = H(z)⁻¹
//!        [  X*   −zI ]
//! ```
//!
//! has blocks `G₁₁ = zΣ^{1/2} R_M Σ^{1/2}` and `G₂₂ = R_N`, where
//! `R_M = (S − z)⁻¹` and `R_N = (X*ΣX − z)⁻¹`. `G` is compared entrywise with
//! `Π = diag(−Σ(I + mΣ)⁻¹, m I)`.
//!
//! [`ResolventBundle`] builds everything densely and is meant for small
//! instances and cross-checks. [`SpectralResolvent`] evaluates traces and
//! bilinear forms of `G` from one eigendecomposition of `S`; the Monte Carlo
//! sweeps use it.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::DataMatrix;
use crate::spectral_core::{
    hermitian_eigen, indexed_matmul, Complex64, IndexedMatrix, PopulationCovariance, SampleEigensystem, Scalar,
    SpectralPoint,
};

/// Condition estimates above this make [`build_bundle`] fail.
pub const MAX_CONDITION: f64 = 1e14;

/// Unit vectors must have norm 1 within this tolerance.
const UNIT_TOL: f64 = 1e-10;

/// Index labels of the linearization: population indices `𝓘_M` and sample
/// indices `𝓘_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Pop(usize),
    Sample(usize),
}

/// Labels of `𝓘 = 𝓘_M ∪ 𝓘_N` in matrix order.
pub fn labels(m: usize, n: usize) -> Vec<Label> {
    (0..m).map(Label::Pop).chain((0..n).map(Label::Sample)).collect()
}

fn complexify<T: Scalar>(a: &DMatrix<T>) -> DMatrix<Complex64> {
    a.map(|x| x.to_complex())
}

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn require_upper(z: SpectralPoint) -> Result<()> {
    if z.eta > 0.0 && z.e.is_finite() && z.eta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("z = {z} must lie in the upper half-plane")))
    }
}

fn shifted_inverse(a: DMatrix<Complex64>, z: Complex64, what: &'static str) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    (a - DMatrix::identity(n, n) * z)
        .try_inverse()
        .ok_or(Error::Singular {
            what,
            condition: f64::INFINITY,
        })
}

/// Dense `H`, `G = H⁻¹`, `R_M`, `R_N` and the block cross-checks.
#[derive(Debug, Clone)]
pub struct ResolventBundle {
    pub z: SpectralPoint,
    m: usize,
    n: usize,
    h: DMatrix<Complex64>,
    g: DMatrix<Complex64>,
    r_m: DMatrix<Complex64>,
    r_n: DMatrix<Complex64>,
    x: DMatrix<Complex64>,
    sigma: DMatrix<Complex64>,
    sqrt_sigma: DMatrix<Complex64>,
    sigma_diagonal: bool,
    /// `‖H‖₁ ‖G‖₁`.
    pub condition: f64,
    /// `max |G H − I|`.
    pub inverse_defect: f64,
    /// `max |G₁₁ − zΣ^{1/2} R_M Σ^{1/2}|`.
    pub top_left_defect: f64,
    /// `max |G₂₂ − R_N|`.
    pub bottom_right_defect: f64,
}

/// Builds the linearization at `z` and inverts it densely. `R_M` and `R_N`
/// are obtained by separate inversions so that the block identities are a
/// genuine cross-check.
pub fn build_bundle<T: Scalar>(z: SpectralPoint, x: &DataMatrix<T>, sigma: &PopulationCovariance<T>) -> Result<ResolventBundle> {
    require_upper(z)?;
    let (m, n) = (x.m(), x.n());
    if m != sigma.dim() {
        return Err(Error::Dimension {
            context: "data rows vs covariance",
            expected: sigma.dim(),
            found: m,
        });
    }
    let zc = z.z();
    let xc = complexify(x.entries());
    let sigma_c = complexify(&sigma.matrix());
    let sqrt_sigma = complexify(&sigma.map(f64::sqrt));
    let sigma_inv = complexify(&sigma.map(|t| 1.0 / t));

    let mut h = DMatrix::<Complex64>::zeros(m + n, m + n);
    h.view_mut((0, 0), (m, m)).copy_from(&(-sigma_inv));
    h.view_mut((0, m), (m, n)).copy_from(&xc);
    h.view_mut((m, 0), (n, m)).copy_from(&xc.adjoint());
    for k in 0..n {
        h[(m + k, m + k)] = -zc;
    }
    let g = h.clone().try_inverse().ok_or(Error::Singular {
        what: "linearization H",
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&h) * one_norm(&g);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular {
            what: "linearization H",
            condition,
        });
    }
    let inverse_defect = max_abs(&(&g * &h - DMatrix::identity(m + n, m + n)));

    let y = &sqrt_sigma * &xc;
    let r_m = shifted_inverse(&y * y.adjoint(), zc, "S − zI")?;
    let r_n = shifted_inverse(xc.adjoint() * &sigma_c * &xc, zc, "X*ΣX − zI")?;
    let top = &sqrt_sigma * &r_m * &sqrt_sigma * zc;
    let top_left_defect = max_abs(&(g.view((0, 0), (m, m)) - top));
    let bottom_right_defect = max_abs(&(g.view((m, m), (n, n)) - &r_n));

    Ok(ResolventBundle {
        z,
        m,
        n,
        h,
        g,
        r_m,
        r_n,
        x: xc,
        sigma: sigma_c,
        sqrt_sigma,
        sigma_diagonal: sigma.is_diagonal(),
        condition,
        inverse_defect,
        top_left_defect,
        bottom_right_defect,
    })
}

impl ResolventBundle {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn g(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    pub fn r_m(&self) -> &DMatrix<Complex64> {
        &self.r_m
    }

    pub fn r_n(&self) -> &DMatrix<Complex64> {
        &self.r_n
    }

    /// Larger of the two block defects.
    pub fn block_defect(&self) -> f64 {
        self.top_left_defect.max(self.bottom_right_defect)
    }

    /// `|Tr(R_M Σ) − Tr(Σ^{1/2} R_M Σ^{1/2})|`.
    pub fn cyclic_trace_defect(&self) -> f64 {
        let a = (&self.r_m * &self.sigma).trace();
        let b = (&self.sqrt_sigma * &self.r_m * &self.sqrt_sigma).trace();
        (a - b).norm()
    }

    pub fn indexed_h(&self) -> IndexedMatrix<Label> {
        let l = labels(self.m, self.n);
        IndexedMatrix::new(l.clone(), l, self.h.clone()).expect("labels match H")
    }

    pub fn indexed_g(&self) -> IndexedMatrix<Label> {
        let l = labels(self.m, self.n);
        IndexedMatrix::new(l.clone(), l, self.g.clone()).expect("labels match G")
    }

    /// `X` as an `𝓘_M × 𝓘_N` matrix.
    pub fn indexed_x(&self) -> IndexedMatrix<Label> {
        IndexedMatrix::new(
            (0..self.m).map(Label::Pop).collect(),
            (0..self.n).map(Label::Sample).collect(),
            self.x.clone(),
        )
        .expect("labels match X")
    }

    /// `X*` as an `𝓘_N × 𝓘_M` matrix.
    pub fn indexed_x_adjoint(&self) -> IndexedMatrix<Label> {
        IndexedMatrix::new(
            (0..self.n).map(Label::Sample).collect(),
            (0..self.m).map(Label::Pop).collect(),
            self.x.adjoint(),
        )
        .expect("labels match X*")
    }
}

/// `Π(z) = diag(−Σ(I + mΣ)⁻¹, m I)`.
#[derive(Debug, Clone)]
pub struct DeterministicApprox {
    pub z: SpectralPoint,
    pub m: Complex64,
    top: DMatrix<Complex64>,
    taus: Vec<f64>,
    n: usize,
}

pub fn build_pi<T: Scalar>(
    z: SpectralPoint,
    m: Complex64,
    sigma: &PopulationCovariance<T>,
    n: usize,
) -> Result<DeterministicApprox> {
    let mut diag = Vec::with_capacity(sigma.dim());
    for &t in sigma.taus() {
        let d = Complex::new(1.0, 0.0) + m * t;
        if d.norm() < 1e-12 {
            return Err(Error::Singular {
                what: "I + mΣ",
                condition: 1.0 / d.norm(),
            });
        }
        diag.push(-t / d);
    }
    let d = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let top = match sigma.frame() {
        None => d,
        Some(v) => {
            let v = complexify(v);
            &v * d * v.adjoint()
        }
    };
    Ok(DeterministicApprox {
        z,
        m,
        top,
        taus: sigma.taus().to_vec(),
        n,
    })
}

impl DeterministicApprox {
    pub fn top_left(&self) -> &DMatrix<Complex64> {
        &self.top
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let m = self.top.nrows();
        let mut p = DMatrix::zeros(m + self.n, m + self.n);
        p.view_mut((0, 0), (m, m)).copy_from(&self.top);
        for k in 0..self.n {
            p[(m + k, m + k)] = self.m;
        }
        p
    }

    /// `M⁻¹ Tr(−Σ(I + mΣ)⁻¹)`.
    pub fn top_trace(&self) -> Complex64 {
        let s: Complex64 = self.taus.iter().map(|&t| -t / (Complex::new(1.0, 0.0) + self.m * t)).sum();
        s / self.taus.len() as f64
    }

    /// `⟨v, Π w⟩`.
    pub fn bilinear(&self, v: &DVector<Complex64>, w: &DVector<Complex64>) -> Complex64 {
        let m = self.top.nrows();
        let top = v.rows(0, m).dotc(&(&self.top * w.rows(0, m)));
        top + v.rows(m, self.n).dotc(&w.rows(m, self.n)) * self.m
    }
}

/// `M⁻¹Tr(−Σ(I + mΣ)⁻¹) + φ⁻¹(1/m + z)`, which vanishes whenever `m` solves
/// the self-consistent equation for the empirical PSM of `Σ`.
pub fn trace_rewrite_defect(approx: &DeterministicApprox, phi: f64) -> Complex64 {
    approx.top_trace() + (approx.m.inv() + approx.z.z()) / phi
}

/// `M⁻¹Tr(−Σ(I + mΣ)⁻¹) + φ⁻¹(1/(zm) + 1)`. The second term is the one in
/// [`trace_rewrite_defect`] divided by `z`, so this vanishes only at `z = 1`.
pub fn trace_rewrite_defect_unscaled(approx: &DeterministicApprox, phi: f64) -> Complex64 {
    approx.top_trace() + ((approx.z.z() * approx.m).inv() + 1.0) / phi
}

/// `Θ(z) = Tr((S − z)⁻¹ g(Σ))` by direct inversion.
pub fn theta<T: Scalar>(
    z: SpectralPoint,
    s: &DMatrix<T>,
    sigma: &PopulationCovariance<T>,
    g: impl Fn(f64) -> f64,
) -> Result<Complex64> {
    require_upper(z)?;
    if s.nrows() != sigma.dim() || !s.is_square() {
        return Err(Error::Dimension {
            context: "theta",
            expected: sigma.dim(),
            found: s.nrows(),
        });
    }
    let r = shifted_inverse(complexify(s), z.z(), "S − zI")?;
    let gs = complexify(&sigma.map(g));
    Ok(r.component_mul(&gs.transpose()).sum())
}

/// `Θ(z) = Σ_{i,j} (λ_i − z)⁻¹ |u_i* v_j|² g(τ_j)`.
pub fn theta_spectral<T: Scalar>(
    z: SpectralPoint,
    eig: &SampleEigensystem<T>,
    sigma: &PopulationCovariance<T>,
    g: impl Fn(f64) -> f64,
) -> Result<Complex64> {
    require_upper(z)?;
    if eig.dim() != sigma.dim() {
        return Err(Error::Dimension {
            context: "theta",
            expected: sigma.dim(),
            found: eig.dim(),
        });
    }
    let overlaps = match sigma.frame() {
        None => eig.vectors().clone(),
        Some(v) => v.adjoint() * eig.vectors(),
    };
    let gt: Vec<f64> = sigma.taus().iter().map(|&t| g(t)).collect();
    let zc = z.z();
    Ok(eig
        .eigenvalues()
        .iter()
        .zip(overlaps.column_iter())
        .map(|(&l, col)| {
            let weight: f64 = col.iter().zip(&gt).map(|(o, gj)| o.modulus_squared() * gj).sum();
            weight / (l - zc)
        })
        .sum())
}

/// `N⁻¹ Tr R_N − m`.
pub fn trace_residual_bottom(bundle: &ResolventBundle, m: Complex64) -> Complex64 {
    bundle.r_n.trace() / bundle.n as f64 - m
}

/// `M⁻¹ Tr(z R_M Σ + Σ(I + mΣ)⁻¹)`.
pub fn trace_residual_top<T: Scalar>(bundle: &ResolventBundle, m: Complex64, sigma: &PopulationCovariance<T>) -> Complex64 {
    let z = bundle.z.z();
    let a = (&bundle.r_m * &bundle.sigma).trace() * z;
    (a + pi_trace(m, sigma.taus())) / bundle.m as f64
}

fn pi_trace(m: Complex64, taus: &[f64]) -> Complex64 {
    taus.iter().map(|&t| t / (Complex::new(1.0, 0.0) + m * t)).sum()
}

/// `N⁻¹ Tr R_N = N⁻¹ [Σ_i (λ_i − z)⁻¹ − (N − M)/z]` from the `M` eigenvalues
/// of `S`.
pub fn bottom_trace_from_spectrum(lambda: &[f64], n: usize, z: SpectralPoint) -> Complex64 {
    let z = z.z();
    let s: Complex64 = lambda.iter().map(|&l| (l - z).inv()).sum();
    (s - (n as f64 - lambda.len() as f64) / z) / n as f64
}

/// Traces and bilinear forms of `G(z)` from the eigensystem of `S`.
///
/// With `S = U diag(λ) U*`, `Y = Σ^{1/2} X`, `a = U*Σ^{1/2} v₁`, `c = U*Y v₂`
/// and `D_i = (λ_i − z)⁻¹`,
///
/// ```text
/// ⟨v, G w⟩ = Σ_i D_i (z ā_i a'_i + ā_i c'_i + c̄_i a'_i + c̄_i c'_i / z) − ⟨v₂, w₂⟩ / z
/// ```
///
/// where primes refer to `w`.
#[derive(Debug, Clone)]
pub struct SpectralResolvent {
    pub z: SpectralPoint,
    m: usize,
    n: usize,
    lambda: Vec<f64>,
    oracle: Vec<f64>,
    taus: Vec<f64>,
    us: DMatrix<Complex64>,
    uy: DMatrix<Complex64>,
}

impl SpectralResolvent {
    pub fn new<T: Scalar>(z: SpectralPoint, x: &DataMatrix<T>, sigma: &PopulationCovariance<T>) -> Result<Self> {
        require_upper(z)?;
        if x.m() != sigma.dim() {
            return Err(Error::Dimension {
                context: "data rows vs covariance",
                expected: sigma.dim(),
                found: x.m(),
            });
        }
        let y = sigma.sqrt_mul(x.entries());
        let (lambda, u) = hermitian_eigen(&y * y.adjoint())?;
        let us = u.adjoint() * sigma.map(f64::sqrt);
        let uy = u.adjoint() * &y;
        Ok(Self {
            z,
            m: x.m(),
            n: x.n(),
            oracle: sigma.quadratic_forms(&u),
            lambda,
            taus: sigma.taus().to_vec(),
            us: complexify(&us),
            uy: complexify(&uy),
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    pub fn bottom_trace(&self) -> Complex64 {
        bottom_trace_from_spectrum(&self.lambda, self.n, self.z)
    }

    pub fn residual_bottom(&self, m: Complex64) -> Complex64 {
        self.bottom_trace() - m
    }

    /// `M⁻¹ [z Σ_i u_i*Σu_i / (λ_i − z) + Σ_j τ_j / (1 + mτ_j)]`.
    pub fn residual_top(&self, m: Complex64) -> Complex64 {
        let z = self.z.z();
        let a: Complex64 = self.lambda.iter().zip(&self.oracle).map(|(&l, &o)| o / (l - z)).sum();
        (a * z + pi_trace(m, &self.taus)) / self.m as f64
    }

    /// `⟨v, G w⟩`.
    pub fn bilinear(&self, v: &DVector<Complex64>, w: &DVector<Complex64>) -> Complex64 {
        let (m, n) = (self.m, self.n);
        let z = self.z.z();
        let (av, cv) = (&self.us * v.rows(0, m), &self.uy * v.rows(m, n));
        let (aw, cw) = (&self.us * w.rows(0, m), &self.uy * w.rows(m, n));
        let mut total = Complex::new(0.0, 0.0);
        for i in 0..m {
            let d = (self.lambda[i] - z).inv();
            let (a, c) = (av[i].conj(), cv[i].conj());
            total += d * (z * a * aw[i] + a * cw[i] + c * aw[i] + c * cw[i] / z);
        }
        total - v.rows(m, n).dotc(&w.rows(m, n)) / z
    }
}

fn check_pairs(pairs: &[(DVector<Complex64>, DVector<Complex64>)], dim: usize) -> Result<()> {
    for (v, w) in pairs {
        for u in [v, w] {
            if u.len() != dim {
                return Err(Error::Dimension {
                    context: "test vector",
                    expected: dim,
                    found: u.len(),
                });
            }
            if (u.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::domain(format!("test vector has norm {}", u.norm())));
            }
        }
    }
    Ok(())
}

/// `|⟨v, (A − B) w⟩|` for each pair.
pub fn bilinear_residuals(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    pairs: &[(DVector<Complex64>, DVector<Complex64>)],
) -> Result<Vec<f64>> {
    check_pairs(pairs, a.nrows())?;
    let diff = a - b;
    Ok(pairs.iter().map(|(v, w)| v.dotc(&(&diff * w)).norm()).collect())
}

/// `|⟨v, (G − Π) w⟩|` for each pair, from the dense bundle.
pub fn entrywise_residuals(
    bundle: &ResolventBundle,
    approx: &DeterministicApprox,
    pairs: &[(DVector<Complex64>, DVector<Complex64>)],
) -> Result<Vec<f64>> {
    bilinear_residuals(&bundle.g, &approx.matrix(), pairs)
}

/// `max |⟨v, (G − Π) w⟩|` over the pairs.
pub fn entrywise_residual(
    bundle: &ResolventBundle,
    approx: &DeterministicApprox,
    pairs: &[(DVector<Complex64>, DVector<Complex64>)],
) -> Result<f64> {
    Ok(entrywise_residuals(bundle, approx, pairs)?.into_iter().fold(0.0, f64::max))
}

/// [`entrywise_residuals`] through the eigensystem of `S`.
pub fn entrywise_residuals_fast(
    resolvent: &SpectralResolvent,
    approx: &DeterministicApprox,
    pairs: &[(DVector<Complex64>, DVector<Complex64>)],
) -> Result<Vec<f64>> {
    check_pairs(pairs, resolvent.m + resolvent.n)?;
    Ok(pairs
        .iter()
        .map(|(v, w)| (resolvent.bilinear(v, w) - approx.bilinear(v, w)).norm())
        .collect())
}

fn basis(dim: usize, k: usize) -> DVector<Complex64> {
    let mut e = DVector::zeros(dim);
    e[k] = Complex::new(1.0, 0.0);
    e
}

/// Fixed test vectors in `ℝ^{M+N}`: coordinate pairs (population, sample and
/// mixed), the uniform vector, and `random` Gaussian unit vectors drawn from
/// seed 0, each paired with itself and with the next one.
pub fn standard_test_vectors(m: usize, n: usize, random: usize) -> Vec<(DVector<Complex64>, DVector<Complex64>)> {
    let dim = m + n;
    let mut pairs = vec![
        (basis(dim, 0), basis(dim, 0)),
        (basis(dim, m - 1), basis(dim, m - 1)),
        (basis(dim, m), basis(dim, m)),
        (basis(dim, dim - 1), basis(dim, dim - 1)),
        (basis(dim, 0), basis(dim, m)),
    ];
    if m > 1 {
        pairs.push((basis(dim, 0), basis(dim, 1)));
    }
    let uniform = DVector::from_element(dim, Complex::new(1.0 / (dim as f64).sqrt(), 0.0));
    pairs.push((uniform.clone(), uniform));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let vectors: Vec<DVector<Complex64>> = (0..=random)
        .map(|_| {
            let g = DVector::from_fn(dim, |_, _| Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0));
            let norm = g.norm();
            g / Complex::new(norm, 0.0)
        })
        .collect();
    for k in 0..random {
        pairs.push((vectors[k].clone(), vectors[k].clone()));
        pairs.push((vectors[k].clone(), vectors[k + 1].clone()));
    }
    pairs
}

/// Outcome of an identity sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub max_violation: f64,
    pub checks: usize,
    /// Trials skipped because a minor was singular or an identity did not
    /// apply.
    pub skipped: usize,
}

impl IdentityReport {
    fn record(&mut self, defect: f64) {
        self.checks += 1;
        if !(defect <= self.max_violation) {
            self.max_violation = if defect.is_nan() { f64::INFINITY } else { defect };
        }
    }
}

fn minor<L: Clone + Eq + std::hash::Hash + std::fmt::Debug>(a: &IndexedMatrix<L>, label: &L) -> Result<IndexedMatrix<L>> {
    if a.rows().len() == 1 {
        IndexedMatrix::new(vec![], vec![], DMatrix::zeros(0, 0))
    } else {
        a.minor_inverse(label)
    }
}

fn pick_other(rng: &mut ChaCha8Rng, len: usize, avoid: usize) -> usize {
    let k = rng.random_range(0..len - 1);
    if k >= avoid {
        k + 1
    } else {
        k
    }
}

/// Checks, on random index choices, with `S = A⁻¹`:
///
/// 1. `S^{(i)}_{jk} = S_{jk} − S_{ji} S_{ik} / S_{ii}` for `j, k ≠ i`;
/// 2. `S_{ij} = −S_{ii} (A S^{(i)})_{ij} = −S_{jj} (S^{(j)} A)_{ij}` for `i ≠ j`;
/// 3. `1/S_{ii} = A_{ii} − (A S^{(i)} A)_{ii}`.
///
/// Products use [`indexed_matmul`]. Index choices come from a fixed seed.
pub fn resolvent_identity_check<L: Clone + Eq + std::hash::Hash + std::fmt::Debug>(
    a: &IndexedMatrix<L>,
    trials: usize,
) -> Result<IdentityReport> {
    if a.rows() != a.cols() || a.rows().is_empty() {
        return Err(Error::domain("identity check needs a non-empty square J × J matrix"));
    }
    let s = a.inverse()?;
    let labels = a.rows().to_vec();
    let len = labels.len();
    let at = |m: &IndexedMatrix<L>, r: usize, c: usize| m.get(&labels[r], &labels[c]).expect("label present");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut report = IdentityReport::default();
    for _ in 0..trials {
        let i = rng.random_range(0..len);
        let si = match minor(a, &labels[i]) {
            Ok(si) => si,
            Err(_) => {
                report.skipped += 1;
                continue;
            }
        };
        let aa = indexed_matmul(&indexed_matmul(a, &si), a);
        report.record((at(&s, i, i).inv() - (at(a, i, i) - at(&aa, i, i))).norm());
        if len == 1 {
            continue;
        }
        let (j, k) = (pick_other(&mut rng, len, i), pick_other(&mut rng, len, i));
        let lhs = at(&si, j, k);
        let rhs = at(&s, j, k) - at(&s, j, i) * at(&s, i, k) / at(&s, i, i);
        report.record((lhs - rhs).norm());

        let a_si = indexed_matmul(a, &si);
        report.record((at(&s, i, j) + at(&s, i, i) * at(&a_si, i, j)).norm());
        let si_a = indexed_matmul(&si, a);
        report.record((at(&s, j, i) + at(&s, i, i) * at(&si_a, j, i)).norm());
    }
    Ok(report)
}

/// The same identities specialised to `G`, with `X` and `X*` as
/// `𝓘_M × 𝓘_N` and `𝓘_N × 𝓘_M` matrices:
///
/// 1. `G^{(r)}_{st} = G_{st} − G_{sr} G_{rt} / G_{rr}` for `s, t ≠ r`;
/// 2. `G_{μν} = −G_{μμ}(X*G^{(μ)})_{μν} = −G_{νν}(G^{(ν)}X)_{μν}` for `μ ≠ ν`;
///    `G_{ij} = −G_{ii}(XG^{(i)})_{ij} = −G_{jj}(G^{(j)}X*)_{ij}` for `i ≠ j`
///    (requires diagonal `Σ`, otherwise skipped);
///    `G_{iμ} = −G_{μμ}(G^{(μ)}X)_{iμ}` and `G_{μi} = −G_{μμ}(X*G^{(μ)})_{μi}`;
/// 3. `1/G_{μμ} = −z − (X*G^{(μ)}X)_{μμ}`.
pub fn green_identity_check(bundle: &ResolventBundle, trials: usize) -> Result<IdentityReport> {
    let (m, n) = (bundle.m, bundle.n);
    if m < 2 || n < 2 {
        return Err(Error::domain("green identity check needs M, N >= 2"));
    }
    let h = bundle.indexed_h();
    let g = bundle.indexed_g();
    let x = bundle.indexed_x();
    let xa = bundle.indexed_x_adjoint();
    let z = bundle.z.z();
    let all = labels(m, n);
    let gv = |a: &Label, b: &Label| g.get(a, b).expect("label present");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut report = IdentityReport::default();
    for _ in 0..trials {
        let r = rng.random_range(0..m + n);
        let gr = h.minor_inverse(&all[r])?;
        let (s, t) = (pick_other(&mut rng, m + n, r), pick_other(&mut rng, m + n, r));
        let (rl, sl, tl) = (&all[r], &all[s], &all[t]);
        let rhs = gv(sl, tl) - gv(sl, rl) * gv(rl, tl) / gv(rl, rl);
        report.record((gr.get(sl, tl).unwrap() - rhs).norm());

        let mu = rng.random_range(0..n);
        let nu = pick_other(&mut rng, n, mu);
        let (mul, nul) = (Label::Sample(mu), Label::Sample(nu));
        let g_mu = h.minor_inverse(&mul)?;
        let g_nu = h.minor_inverse(&nul)?;
        let xg_mu = indexed_matmul(&xa, &g_mu);
        let g_mu_x = indexed_matmul(&g_mu, &x);
        let g_nu_x = indexed_matmul(&g_nu, &x);
        let g_mm = gv(&mul, &mul);
        report.record((gv(&mul, &nul) + g_mm * xg_mu.get(&mul, &nul).unwrap()).norm());
        report.record((gv(&mul, &nul) + gv(&nul, &nul) * g_nu_x.get(&mul, &nul).unwrap()).norm());

        let il = Label::Pop(rng.random_range(0..m));
        report.record((gv(&il, &mul) + g_mm * g_mu_x.get(&il, &mul).unwrap()).norm());
        report.record((gv(&mul, &il) + g_mm * xg_mu.get(&mul, &il).unwrap()).norm());

        let quad = indexed_matmul(&xg_mu, &x).get(&mul, &mul).unwrap();
        report.record((g_mm.inv() - (-z - quad)).norm());

        if bundle.sigma_diagonal {
            let i = rng.random_range(0..m);
            let j = pick_other(&mut rng, m, i);
            let (il, jl) = (Label::Pop(i), Label::Pop(j));
            let g_i = h.minor_inverse(&il)?;
            let g_j = h.minor_inverse(&jl)?;
            let left = indexed_matmul(&x, &g_i).get(&il, &jl).unwrap();
            let right = indexed_matmul(&g_j, &xa).get(&il, &jl).unwrap();
            report.record((gv(&il, &jl) + gv(&il, &il) * left).norm());
            report.record((gv(&il, &jl) + gv(&jl, &jl) * right).norm());
        } else {
            report.skipped += 1;
        }
    }
    Ok(report)
}

/// Random well-conditioned complex matrix `I·scale + G/√n`, `G` standard
/// complex Gaussian.
pub fn random_well_conditioned(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (2.0 * n as f64).sqrt();
    DMatrix::from_fn(n, n, |i, j| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * s + if i == j { 3.0 } else { 0.0 }, im * s)
    })
}
