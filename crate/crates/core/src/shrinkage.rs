//! Rotation-equivariant shrinkage: the shrinkage function `δ`, the oracle and
//! feasible estimators built on the sample eigenvectors, and the
//! minimum-variance loss.
//!
//! An estimator keeps the sample frame `U` and replaces the eigenvalues by a
//! diagonal `D̂`, giving `Σ̂ = U D̂ U*`. The oracle uses `D̂_ii = u_i* Σ u_i`; the
//! feasible estimator uses `δ(λ_i)` tabulated from the population spectral
//! measure.

use log::warn;
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp_law::BoundaryProfile;
use crate::spectral_core::{Complex64, PopulationCovariance, SampleEigensystem, Scalar};

/// Denominators of `δ` below this are reported as singular.
pub const DELTA_SINGULAR: f64 = 1e-14;

/// `δ(x) = x / ([π c x w]² + [1 − c − π c x 𝓗w]²)` with `w`, `𝓗w` read off
/// `m̌_S = π(𝓗w + i w)`, the boundary value of the limiting spectral measure of
/// `S`, and `c = φ`.
///
/// With `c = 0` the denominator is 1 and `δ(x) = x`.
pub fn delta(x: f64, m_check_s: Complex64, c: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("delta needs x > 0, got {x}")));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::domain(format!("delta needs 0 <= c < 1, got {c}")));
    }
    let pi = std::f64::consts::PI;
    let (w, hw) = (m_check_s.im / pi, m_check_s.re / pi);
    let denom = (pi * c * x * w).powi(2) + (1.0 - c - pi * c * x * hw).powi(2);
    if denom < DELTA_SINGULAR {
        return Err(Error::Singular {
            what: "shrinkage denominator",
            condition: denom,
        });
    }
    Ok(x / denom)
}

/// Equivalent form `1 / (x |m̌|²)` in terms of the companion boundary value.
pub fn delta_companion(x: f64, m_check: Complex64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("delta needs x > 0, got {x}")));
    }
    let denom = x * m_check.norm_sqr();
    if denom < DELTA_SINGULAR {
        return Err(Error::Singular {
            what: "shrinkage denominator",
            condition: denom,
        });
    }
    Ok(1.0 / denom)
}

/// `δ` at every grid point of `profile` lying in the support (`None` outside).
pub fn delta_curve(profile: &BoundaryProfile, c: f64) -> Result<Vec<Option<f64>>> {
    (0..profile.len())
        .map(|k| {
            if profile.in_support(k) {
                delta(profile.grid[k], profile.m_check_s(k), c).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Butland
/// slopes). Constant extrapolation outside the nodes.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                context: "monotone cubic nodes",
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.is_empty() || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("interpolation nodes must be non-empty and strictly increasing"));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![s[0], s[0]];
        } else if n > 2 {
            for k in 1..n - 1 {
                if s[k - 1] * s[k] > 0.0 {
                    let (w1, w2) = (2.0 * h[k] + h[k - 1], h[k] + 2.0 * h[k - 1]);
                    d[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], s[0], s[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[k + 1] - self.x[k];
        let u = (t - self.x[k]) / h;
        let (u2, u3) = (u * u, u * u * u);
        self.y[k] * (2.0 * u3 - 3.0 * u2 + 1.0)
            + self.d[k] * h * (u3 - 2.0 * u2 + u)
            + self.y[k + 1] * (-2.0 * u3 + 3.0 * u2)
            + self.d[k + 1] * h * (u3 - u2)
    }
}

/// Three-point end slope, limited so the end segment stays monotone.
fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Oracle,
    Delta,
    Sample,
    Baseline,
}

impl EstimateKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimateKind::Oracle => "oracle",
            EstimateKind::Delta => "delta",
            EstimateKind::Sample => "sample",
            EstimateKind::Baseline => "baseline",
        }
    }
}

/// `Σ̂ = U (β D̂) U*`.
#[derive(Debug, Clone)]
pub struct ShrinkageEstimate<T: Scalar = f64> {
    frame: DMatrix<T>,
    dhat: Vec<f64>,
    kind: EstimateKind,
    beta: f64,
    /// Eigenvalues moved onto the support before evaluating `δ`.
    pub clamped: usize,
    /// Clamped eigenvalues that sat further than the edge margin outside.
    pub flagged: usize,
}

impl<T: Scalar> ShrinkageEstimate<T> {
    pub fn new(frame: DMatrix<T>, dhat: Vec<f64>, kind: EstimateKind) -> Result<Self> {
        if !frame.is_square() || frame.ncols() != dhat.len() {
            return Err(Error::Dimension {
                context: "shrinkage estimate",
                expected: frame.ncols(),
                found: dhat.len(),
            });
        }
        Ok(Self {
            frame,
            dhat,
            kind,
            beta: 1.0,
            clamped: 0,
            flagged: 0,
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn frame(&self) -> &DMatrix<T> {
        &self.frame
    }

    pub fn dhat(&self) -> &[f64] {
        &self.dhat
    }

    pub fn kind(&self) -> EstimateKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dhat.len()
    }

    /// Effective diagonal `β D̂`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.dhat.iter().map(|d| d * self.beta).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn matrix(&self) -> DMatrix<T> {
        let mut scaled = self.frame.clone();
        for (mut col, d) in scaled.column_iter_mut().zip(self.diagonal()) {
            col *= T::from_real(d);
        }
        scaled * self.frame.adjoint()
    }
}

/// `D^or = diag(u_i* Σ u_i)`.
pub fn oracle_shrink<T: Scalar>(u: &DMatrix<T>, sigma: &PopulationCovariance<T>) -> Result<ShrinkageEstimate<T>> {
    if u.nrows() != sigma.dim() || !u.is_square() {
        return Err(Error::Dimension {
            context: "oracle frame",
            expected: sigma.dim(),
            found: u.nrows(),
        });
    }
    ShrinkageEstimate::new(u.clone(), sigma.quadratic_forms(u), EstimateKind::Oracle)
}

/// `δ` applied to a list of eigenvalues.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrunkSpectrum {
    pub lambda: Vec<f64>,
    pub delta: Vec<f64>,
    pub clamped: Vec<bool>,
    pub flagged: Vec<bool>,
}

impl ShrunkSpectrum {
    pub fn clamped_count(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&c| c).count()
    }
}

/// Evaluates `δ` at each `λ` by monotone cubic interpolation of `δ` on the
/// support nodes of `profile`, one interpolant per support interval.
///
/// Eigenvalues outside every support interval are clamped to the nearest
/// support node; those further out than `width · N^{-2/3}` (with
/// `N = M / φ`, `M = lambdas.len()`) are also flagged.
pub fn shrink_spectrum(lambdas: &[f64], profile: &BoundaryProfile, c: f64) -> Result<ShrunkSpectrum> {
    if profile.edges.is_empty() {
        return Err(Error::domain("profile has no support interval"));
    }
    let mut pieces = Vec::with_capacity(profile.edges.len());
    for &[a, b] in &profile.edges {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (k, &e) in profile.grid.iter().enumerate() {
            if e >= a && e <= b && e > 0.0 {
                xs.push(e);
                ys.push(delta(e, profile.m_check_s(k), c)?);
            }
        }
        if xs.is_empty() {
            return Err(Error::domain(format!("profile grid has no node in [{a}, {b}]")));
        }
        pieces.push(((a, b), MonotoneCubic::new(xs, ys)?));
    }
    let width = profile.edges.last().unwrap()[1] - profile.edges[0][0];
    let n = (lambdas.len() as f64 / profile.phi).round().max(1.0);
    let margin = width * n.powf(-2.0 / 3.0);

    let mut out = ShrunkSpectrum {
        lambda: lambdas.to_vec(),
        delta: Vec::with_capacity(lambdas.len()),
        clamped: Vec::with_capacity(lambdas.len()),
        flagged: Vec::with_capacity(lambdas.len()),
    };
    for &lam in lambdas {
        if let Some((_, p)) = pieces.iter().find(|((a, b), _)| lam >= *a && lam <= *b) {
            out.delta.push(p.eval(lam));
            out.clamped.push(false);
            out.flagged.push(false);
            continue;
        }
        let (dist, value) = pieces
            .iter()
            .flat_map(|((a, b), p)| [((lam - a).abs(), p.eval(p.lo())), ((lam - b).abs(), p.eval(p.hi()))])
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        out.delta.push(value);
        out.clamped.push(true);
        out.flagged.push(dist > margin);
    }
    let (clamped, flagged) = (out.clamped_count(), out.flagged_count());
    if flagged > 0 {
        warn!("{clamped} eigenvalues clamped onto the support, {flagged} beyond the edge margin {margin:.3e}");
    }
    Ok(out)
}

/// `Σ̃ = Σ δ(λ_i) u_i u_i*`.
pub fn delta_shrink<T: Scalar>(
    eigensystem: &SampleEigensystem<T>,
    profile: &BoundaryProfile,
    c: f64,
) -> Result<ShrinkageEstimate<T>> {
    let spectrum = shrink_spectrum(eigensystem.eigenvalues(), profile, c)?;
    let (clamped, flagged) = (spectrum.clamped_count(), spectrum.flagged_count());
    let mut est = ShrinkageEstimate::new(eigensystem.vectors().clone(), spectrum.delta, EstimateKind::Delta)?;
    est.clamped = clamped;
    est.flagged = flagged;
    Ok(est)
}

/// Comparison baselines: the raw sample eigenvalues and the scalar
/// `trace / M` (the trace of `S` unless an estimate is supplied).
pub fn baseline_estimates<T: Scalar>(
    eigensystem: &SampleEigensystem<T>,
    sigma_trace_estimate: Option<f64>,
) -> Vec<ShrinkageEstimate<T>> {
    let lam = eigensystem.eigenvalues().to_vec();
    let m = lam.len();
    let level = sigma_trace_estimate.unwrap_or_else(|| lam.iter().sum()) / m as f64;
    let u = eigensystem.vectors();
    vec![
        ShrinkageEstimate::new(u.clone(), lam, EstimateKind::Sample).expect("square frame"),
        ShrinkageEstimate::new(u.clone(), vec![level; m], EstimateKind::Baseline).expect("square frame"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub mv_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius_loss: Option<f64>,
}

/// Minimum-variance loss with all traces divided by `n`:
/// `[Tr(Σ̂⁻¹ΣΣ̂⁻¹)/N] / [Tr(Σ̂⁻¹)/N]² − 1 / (Tr(Σ⁻¹)/N)`.
///
/// The frame is assumed unitary, so both traces reduce to sums over
/// `d_i = (β D̂)_ii` and `o_i = u_i* Σ u_i`.
pub fn mv_loss<T: Scalar>(estimate: &ShrinkageEstimate<T>, sigma: &PopulationCovariance<T>, n: usize) -> Result<LossReport> {
    let d = checked_diagonal(estimate, sigma)?;
    let o = sigma.quadratic_forms(estimate.frame());
    let n = n as f64;
    let inv: f64 = d.iter().map(|x| 1.0 / x).sum();
    let sandwich: f64 = d.iter().zip(&o).map(|(x, oi)| oi / (x * x)).sum();
    let mv = (sandwich / n) / (inv / n).powi(2) - n / sigma.inverse_trace();
    Ok(LossReport {
        mv_loss: mv,
        frobenius_loss: None,
    })
}

/// [`mv_loss`] plus `‖Σ̂ − Σ‖_F² / N`.
pub fn loss_report<T: Scalar>(
    estimate: &ShrinkageEstimate<T>,
    sigma: &PopulationCovariance<T>,
    n: usize,
) -> Result<LossReport> {
    let mut report = mv_loss(estimate, sigma, n)?;
    let d = estimate.diagonal();
    let o = sigma.quadratic_forms(estimate.frame());
    let cross: f64 = d.iter().zip(&o).map(|(x, oi)| x * oi).sum();
    let fro = d.iter().map(|x| x * x).sum::<f64>() - 2.0 * cross + sigma.taus().iter().map(|t| t * t).sum::<f64>();
    report.frobenius_loss = Some(fro.max(0.0) / n as f64);
    Ok(report)
}

fn checked_diagonal<T: Scalar>(estimate: &ShrinkageEstimate<T>, sigma: &PopulationCovariance<T>) -> Result<Vec<f64>> {
    if estimate.dim() != sigma.dim() {
        return Err(Error::Dimension {
            context: "loss",
            expected: sigma.dim(),
            found: estimate.dim(),
        });
    }
    let d = estimate.diagonal();
    if d.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::domain("singular estimate: diagonal must be strictly positive"));
    }
    Ok(d)
}

/// Boundary value of the limiting spectral measure of `S` at `x > 0` from a
/// companion value, for use with [`delta`].
pub fn esd_from_companion(m_check: Complex64, x: f64, phi: f64) -> Complex64 {
    (m_check + Complex::new((1.0 - phi) / x, 0.0)) / phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp_law::{boundary_profile, boundary_value, support_profile, DEFAULT_ETA_SCHEDULE};
    use crate::sampling::{sample_cov, sample_data};
    use crate::spectral_core::{ModelConfig, PopulationSpectralMeasure, PsmAtom};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quadratic_oracle(z: Complex64, phi: f64) -> Complex64 {
        let b = z + 1.0 - phi;
        let disc = (b * b - 4.0 * z).sqrt();
        let r1 = (-b + disc) / (2.0 * z);
        let r2 = (-b - disc) / (2.0 * z);
        if r1.im > r2.im {
            r1
        } else {
            r2
        }
    }

    fn two_atoms() -> PopulationSpectralMeasure {
        PopulationSpectralMeasure::new(vec![PsmAtom { tau: 1.0, weight: 0.5 }, PsmAtom { tau: 3.0, weight: 0.5 }]).unwrap()
    }

    fn rotation45() -> DMatrix<f64> {
        let s = 0.5f64.sqrt();
        DMatrix::from_row_slice(2, 2, &[s, -s, s, s])
    }

    /// Random orthogonal frame via QR of a Gaussian matrix.
    fn random_frame(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let g = DMatrix::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
        g.qr().q()
    }

    #[test]
    fn zero_concentration_is_identity_map() {
        let m = Complex::new(0.3, 0.8);
        for x in [0.7, 1.0, 2.5] {
            assert_abs_diff_eq!(delta(x, m, 0.0).unwrap(), x, epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_population_at_one() {
        let m_check = quadratic_oracle(Complex::new(1.0, 1e-14), 0.5);
        assert_abs_diff_eq!(m_check.re, -0.75, epsilon = 1e-9);
        let m_s = esd_from_companion(m_check, 1.0, 0.5);
        assert_abs_diff_eq!(delta(1.0, m_s, 0.5).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(delta_companion(1.0, m_check).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn identity_population_is_flat_on_bulk() {
        for k in 0..50 {
            let x = 0.2 + 2.6 * k as f64 / 49.0;
            let m_check = quadratic_oracle(Complex::new(x, 1e-15), 0.5);
            let d = delta(x, esd_from_companion(m_check, x, 0.5), 0.5).unwrap();
            assert!((d - 1.0).abs() < 1e-9, "x = {x}: {d}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let m = Complex::new(0.1, 0.2);
        assert!(matches!(delta(0.0, m, 0.5), Err(Error::Domain(_))));
        assert!(matches!(delta(-1.0, m, 0.5), Err(Error::Domain(_))));
        assert!(matches!(delta(1.0, m, 1.0), Err(Error::Domain(_))));
        // 1 − c − c x m̌_S = 0
        let singular = Complex::new(1.0, 0.0);
        assert!(matches!(delta(1.0, singular, 0.5), Err(Error::Singular { .. })));
        assert!(matches!(delta_companion(1.0, Complex::new(0.0, 0.0)), Err(Error::Singular { .. })));
    }

    #[test]
    fn equivalent_forms_agree_on_two_atom_bulk() {
        let psm = two_atoms();
        let profile = support_profile(&psm, 0.5, 200).unwrap();
        let mut checked = 0;
        for k in 0..profile.len() {
            if profile.flagged[k] || profile.w_s[k] < 1e-3 {
                continue;
            }
            let x = profile.grid[k];
            let d = delta(x, profile.m_check_s(k), 0.5).unwrap();
            let product = x * profile.m_check[k].norm_sqr() * d;
            assert!((product - 1.0).abs() < 1e-9, "x = {x}: {product}");
            checked += 1;
        }
        assert!(checked > 150);
    }

    #[test]
    fn monotone_cubic_basics() {
        let p = MonotoneCubic::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        for t in [0.0, 0.3, 1.5, 2.99] {
            assert_abs_diff_eq!(p.eval(t), 2.0 * t, epsilon = 1e-14);
        }
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(9.0), 6.0);

        // step data must not overshoot
        let s = MonotoneCubic::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        for k in 0..=400 {
            let v = s.eval(k as f64 / 100.0);
            assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        }
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_cubic_preserves_monotonicity(
            steps in proptest::collection::vec((0.01f64..1.0, 0.0f64..2.0), 3..20),
            probes in proptest::collection::vec(0.0f64..1.0, 20),
        ) {
            let (mut x, mut y) = (vec![0.0], vec![0.0]);
            for (dx, dy) in steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let p = MonotoneCubic::new(x.clone(), y).unwrap();
            let mut ts: Vec<f64> = probes.iter().map(|t| t * x.last().unwrap()).collect();
            ts.sort_by(f64::total_cmp);
            for w in ts.windows(2) {
                prop_assert!(p.eval(w[1]) >= p.eval(w[0]) - 1e-12);
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let sigma = PopulationCovariance::<f64>::diagonal(vec![1.0, 3.0]).unwrap();
        let est = oracle_shrink(&rotation45(), &sigma).unwrap();
        assert_abs_diff_eq!(est.dhat()[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(est.dhat()[1], 2.0, epsilon = 1e-14);

        let sigma = PopulationCovariance::<f64>::diagonal(vec![4.0, 2.0, 0.5]).unwrap();
        let est = oracle_shrink(&DMatrix::identity(3, 3), &sigma).unwrap();
        assert_eq!(est.dhat(), &[4.0, 2.0, 0.5]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_frame(6, &mut rng);
        let id = PopulationCovariance::<f64>::diagonal(vec![1.0; 6]).unwrap();
        for d in oracle_shrink(&u, &id).unwrap().dhat() {
            assert_abs_diff_eq!(*d, 1.0, epsilon = 1e-14);
        }
        assert!(oracle_shrink(&DMatrix::identity(2, 2), &id).is_err());
    }

    #[test]
    fn loss_examples() {
        let sigma = PopulationCovariance::<f64>::diagonal(vec![1.0, 2.0]).unwrap();
        let frame = DMatrix::identity(2, 2);
        let est = ShrinkageEstimate::new(frame.clone(), vec![1.0, 1.0], EstimateKind::Baseline).unwrap();
        assert_abs_diff_eq!(mv_loss(&est, &sigma, 2).unwrap().mv_loss, 1.5 - 1.0 / 0.75, epsilon = 1e-14);

        let exact = ShrinkageEstimate::new(frame.clone(), vec![1.0, 2.0], EstimateKind::Oracle).unwrap();
        assert_abs_diff_eq!(mv_loss(&exact, &sigma, 2).unwrap().mv_loss, 0.0, epsilon = 1e-10);
        let report = loss_report(&exact, &sigma, 2).unwrap();
        assert_abs_diff_eq!(report.frobenius_loss.unwrap(), 0.0, epsilon = 1e-12);

        let a = mv_loss(&est, &sigma, 2).unwrap().mv_loss;
        let b = mv_loss(&est.clone().with_beta(2.0), &sigma, 2).unwrap().mv_loss;
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);

        let bad = ShrinkageEstimate::new(frame, vec![1.0, 0.0], EstimateKind::Sample).unwrap();
        assert!(matches!(mv_loss(&bad, &sigma, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn frobenius_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_frame(5, &mut rng);
        let sigma = PopulationCovariance::<f64>::diagonal(vec![0.5, 1.0, 2.0, 3.0, 4.5]).unwrap();
        let est = ShrinkageEstimate::new(u, vec![1.0, 2.0, 0.7, 3.0, 1.1], EstimateKind::Delta).unwrap();
        let dense = (est.matrix() - sigma.matrix()).norm_squared() / 7.0;
        assert_abs_diff_eq!(loss_report(&est, &sigma, 7).unwrap().frobenius_loss.unwrap(), dense, epsilon = 1e-12);
    }

    /// Brute-force loss from dense matrices.
    fn dense_mv_loss(est: &ShrinkageEstimate, sigma: &PopulationCovariance, n: usize) -> f64 {
        let inv = est.matrix().try_inverse().unwrap();
        let n = n as f64;
        let num = (&inv * sigma.matrix() * &inv).trace() / n;
        let den = (inv.trace() / n).powi(2);
        num / den - 1.0 / (sigma.matrix().try_inverse().unwrap().trace() / n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn oracle_is_stationary_and_optimal(seed in 0u64..10_000, m in 2usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let taus: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..5.0)).collect();
            let sigma = PopulationCovariance::<f64>::diagonal(taus).unwrap();
            let u = random_frame(m, &mut rng);
            let oracle = oracle_shrink(&u, &sigma).unwrap();
            let n = 2 * m;
            let base = mv_loss(&oracle, &sigma, n).unwrap().mv_loss;
            prop_assert!((base - dense_mv_loss(&oracle, &sigma, n)).abs() < 1e-9);
            prop_assert!(base >= -1e-9);

            // perturbation size for optimality, step for the central difference
            let (bump_size, h) = (1e-3, 1e-5);
            let mut grad = 0.0f64;
            for i in 0..m {
                let bump = |delta: f64| {
                    let mut d = oracle.dhat().to_vec();
                    d[i] += delta;
                    let est = ShrinkageEstimate::new(u.clone(), d, EstimateKind::Oracle).unwrap();
                    mv_loss(&est, &sigma, n).unwrap().mv_loss
                };
                prop_assert!(bump(bump_size) >= base - 1e-12 && bump(-bump_size) >= base - 1e-12);
                grad += ((bump(h) - bump(-h)) / (2.0 * h)).powi(2);
            }
            prop_assert!(grad.sqrt() <= 1e-6, "gradient norm {}", grad.sqrt());

            for beta in [0.5, 1.0, 2.0] {
                let scaled = oracle.clone().with_beta(beta);
                prop_assert!((mv_loss(&scaled, &sigma, n).unwrap().mv_loss - base).abs() <= 1e-12);
            }
            prop_assert!((oracle.dhat().iter().sum::<f64>() - sigma.trace()).abs() <= 1e-9);
            let lo = sigma.taus().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = sigma.taus().iter().cloned().fold(0.0, f64::max);
            prop_assert!(oracle.dhat().iter().all(|d| *d >= lo - 1e-12 && *d <= hi + 1e-12));
        }

        #[test]
        fn losses_are_nonnegative(seed in 0u64..10_000, m in 2usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let taus: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..5.0)).collect();
            let sigma = PopulationCovariance::<f64>::diagonal(taus).unwrap();
            let u = random_frame(m, &mut rng);
            let d: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..10.0)).collect();
            let est = ShrinkageEstimate::new(u, d, EstimateKind::Baseline).unwrap();
            prop_assert!(mv_loss(&est, &sigma, 3 * m).unwrap().mv_loss >= -1e-9);
        }
    }

    #[test]
    fn baselines_and_oracle_ordering() {
        let config = ModelConfig::new(32, 64).unwrap();
        let psm = two_atoms();
        let sigma = psm.diagonal_covariance(32).unwrap();
        for seed in 0..10 {
            let x = sample_data::<f64>(&config, seed).unwrap();
            let eig = sample_cov(&sigma, &x).unwrap().into_eigensystem();
            let base = baseline_estimates(&eig, None);
            assert_eq!(base[0].kind(), EstimateKind::Sample);
            let rel = (base[0].matrix() - eig.source()).norm() / eig.source().norm();
            assert!(rel < 1e-8);
            let oracle = mv_loss(&oracle_shrink(eig.vectors(), &sigma).unwrap(), &sigma, 64).unwrap().mv_loss;
            for est in &base {
                assert!(mv_loss(est, &sigma, 64).unwrap().mv_loss >= oracle - 1e-9);
            }
        }
    }

    #[test]
    fn scalar_baseline_near_one_for_identity() {
        let config = ModelConfig::new(128, 256).unwrap();
        let sigma = PopulationCovariance::<f64>::diagonal(vec![1.0; 128]).unwrap();
        let x = sample_data::<f64>(&config, 3).unwrap();
        let eig = sample_cov(&sigma, &x).unwrap().into_eigensystem();
        let level = baseline_estimates(&eig, None)[1].dhat()[0];
        assert!((level - 1.0).abs() < 0.05, "{level}");
    }

    #[test]
    fn delta_shrink_identity() {
        let psm = PopulationSpectralMeasure::identity();
        let profile = support_profile(&psm, 0.5, 400).unwrap();
        let config = ModelConfig::with_ratio(0.5, 1024).unwrap();
        let sigma = psm.diagonal_covariance(config.m).unwrap();
        let x = sample_data::<f64>(&config, 11).unwrap();
        let eig = sample_cov(&sigma, &x).unwrap().into_eigensystem();
        let est = delta_shrink(&eig, &profile, 0.5).unwrap();
        assert_eq!(est.kind(), EstimateKind::Delta);
        assert!(est.dhat().iter().all(|d| (0.9..=1.1).contains(d)), "{:?}", est.dhat());
    }

    #[test]
    fn delta_shrink_without_concentration_returns_eigenvalues() {
        let psm = two_atoms();
        let profile = support_profile(&psm, 0.5, 400).unwrap();
        let [a, b] = profile.edges[0];
        let lam: Vec<f64> = (0..6).map(|k| a + (b - a) * (0.1 + 0.15 * k as f64)).rev().collect();
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lam.clone()));
        let eig = SampleEigensystem::from_matrix(s).unwrap();
        let est = delta_shrink(&eig, &profile, 0.0).unwrap();
        for (d, l) in est.dhat().iter().zip(eig.eigenvalues()) {
            assert_abs_diff_eq!(*d, *l, epsilon = 1e-12);
        }
        assert_eq!(est.clamped, 0);
    }

    #[test]
    fn delta_shrink_preserves_trace() {
        let psm = two_atoms();
        let profile = support_profile(&psm, 0.5, 400).unwrap();
        let config = ModelConfig::with_ratio(0.5, 1024).unwrap();
        let sigma = psm.diagonal_covariance(config.m).unwrap();
        let x = sample_data::<f64>(&config, 2).unwrap();
        let eig = sample_cov(&sigma, &x).unwrap().into_eigensystem();
        let est = delta_shrink(&eig, &profile, 0.5).unwrap();
        let ratio = est.trace() / config.m as f64;
        assert!((ratio - 2.0).abs() < 0.06, "{ratio}");
    }

    #[test]
    fn clamping_counts_and_flags() {
        let psm = PopulationSpectralMeasure::identity();
        let profile = support_profile(&psm, 0.5, 100).unwrap();
        let [a, b] = profile.edges[0];
        let lam = [b + 1.0, b + 1e-9, 1.0, a - 1e-9, a - 1.0];
        let out = shrink_spectrum(&lam, &profile, 0.5).unwrap();
        assert_eq!(out.clamped, vec![true, true, false, true, true]);
        assert_eq!(out.flagged, vec![true, false, false, false, true]);
        assert_abs_diff_eq!(out.delta[2], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn curve_matches_pointwise_values() {
        let psm = two_atoms();
        let grid: Vec<f64> = (1..40).map(|k| 0.25 * k as f64).collect();
        let profile = boundary_profile(&grid, &psm, 0.5, &DEFAULT_ETA_SCHEDULE).unwrap();
        let curve = delta_curve(&profile, 0.5).unwrap();
        for (k, v) in curve.iter().enumerate() {
            match v {
                Some(d) => {
                    let p = boundary_value(grid[k], &psm, 0.5, &DEFAULT_ETA_SCHEDULE).unwrap();
                    assert_abs_diff_eq!(*d, delta(grid[k], p.m_check_s, 0.5).unwrap(), epsilon = 1e-12);
                }
                None => assert!(!profile.in_support(k)),
            }
        }
        assert!(curve.iter().any(Option::is_some) && curve.iter().any(Option::is_none));
    }

    /// Monte Carlo oracle for `δ(2)` with `π = (δ_1 + δ_3)/2`: the mean of
    /// `u_i* Σ u_i` over sample eigenvalues in `[1.95, 2.05]`.
    #[test]
    #[ignore = "long Monte Carlo run (N = 4000, 50 seeds)"]
    fn delta_matches_monte_carlo_oracle_at_two() {
        let psm = two_atoms();
        let p = boundary_value(2.0, &psm, 0.5, &DEFAULT_ETA_SCHEDULE).unwrap();
        let predicted = delta(2.0, p.m_check_s, 0.5).unwrap();
        let config = ModelConfig::with_ratio(0.5, 4000).unwrap();
        let sigma = psm.diagonal_covariance(config.m).unwrap();
        let (mut total, mut count) = (0.0, 0usize);
        for seed in 0..50 {
            let x = sample_data::<f64>(&config, seed).unwrap();
            let eig = sample_cov(&sigma, &x).unwrap().into_eigensystem();
            let o = sigma.quadratic_forms(eig.vectors());
            for (l, oi) in eig.eigenvalues().iter().zip(o) {
                if (1.95..=2.05).contains(l) {
                    total += oi;
                    count += 1;
                }
            }
        }
        let mc = total / count as f64;
        assert!(((predicted - mc) / mc).abs() < 0.02, "delta {predicted} vs oracle {mc}");
    }
}
