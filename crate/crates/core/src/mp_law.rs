//! The self-consistent equation
//!
//! ```text
//! 1/m = −z + φ ∫ x / (1 + m x) dπ(x),     equivalently  f(m) = z,
//! f(m) = −1/m + φ Σ_j π_j / (m + 1/τ_j)
//! ```
//!
//! whose unique solution in the upper half-plane is the Stieltjes transform of
//! the limiting spectral measure of the `N × N` companion matrix `X*ΣX`
//! (atom `(1 − φ)⁺` at zero). Boundary values on the real axis give the
//! companion density `w = Im m̌ / π` and the limiting density of `S`,
//! `w_S = w / φ` on `E > 0`.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_core::{Complex64, PopulationSpectralMeasure, SpectralPoint};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 500;
/// η values walked down when taking `z → E` from above.
pub const DEFAULT_ETA_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
/// Density threshold separating support from gaps when locating edges.
pub const EDGE_THRESHOLD: f64 = 1e-4;
const EDGE_BISECTION_TOL: f64 = 1e-8;
const EXTRAPOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StieltjesSolution {
    pub z: SpectralPoint,
    pub m: Complex64,
    /// `|f(m) − z|`.
    pub residual: f64,
    pub iterations: usize,
}

/// `f(m) = −1/m + φ Σ_j π_j / (m + 1/τ_j)`.
pub fn root_function(m: Complex64, psm: &PopulationSpectralMeasure, phi: f64) -> Complex64 {
    let sum: Complex64 = psm
        .atoms()
        .iter()
        .map(|a| a.weight / (m + 1.0 / a.tau))
        .sum();
    -1.0 / m + sum * phi
}

fn root_derivative(m: Complex64, psm: &PopulationSpectralMeasure, phi: f64) -> Complex64 {
    let sum: Complex64 = psm
        .atoms()
        .iter()
        .map(|a| {
            let d = m + 1.0 / a.tau;
            a.weight / (d * d)
        })
        .sum();
    1.0 / (m * m) - sum * phi
}

/// `m ↦ 1 / (−z + φ ∫ x/(1 + m x) dπ)`; maps the upper half-plane into itself.
fn fixed_point_map(m: Complex64, z: Complex64, psm: &PopulationSpectralMeasure, phi: f64) -> Complex64 {
    let sum: Complex64 = psm
        .atoms()
        .iter()
        .map(|a| a.weight * a.tau / (1.0 + m * a.tau))
        .sum();
    1.0 / (-z + sum * phi)
}

fn project(m: Complex64) -> Complex64 {
    if m.im < 0.0 {
        m.conj()
    } else {
        m
    }
}

struct Iterate {
    m: Complex64,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Newton steps on `f(m) − z`, accepted only when they reduce the residual;
/// otherwise one fixed-point step.
fn iterate(z: Complex64, init: Complex64, psm: &PopulationSpectralMeasure, phi: f64, opts: SolverOptions) -> Iterate {
    let mut m = project(init);
    if m.im == 0.0 {
        m.im = z.im.max(f64::MIN_POSITIVE);
    }
    let mut residual = (root_function(m, psm, phi) - z).norm();
    for it in 0..opts.max_iter {
        if residual <= opts.tol {
            // one polishing step
            let step = (root_function(m, psm, phi) - z) / root_derivative(m, psm, phi);
            let polished = project(m - step);
            let r = (root_function(polished, psm, phi) - z).norm();
            if polished.im > 0.0 && r < residual {
                m = polished;
                residual = r;
            }
            return Iterate {
                m,
                residual,
                iterations: it,
                converged: true,
            };
        }
        let r = root_function(m, psm, phi) - z;
        let newton = project(m - r / root_derivative(m, psm, phi));
        let newton_res = (root_function(newton, psm, phi) - z).norm();
        if newton.re.is_finite() && newton.im > 0.0 && newton_res < residual {
            m = newton;
            residual = newton_res;
        } else {
            m = project(fixed_point_map(m, z, psm, phi));
            residual = (root_function(m, psm, phi) - z).norm();
        }
    }
    Iterate {
        m,
        residual,
        iterations: opts.max_iter,
        converged: residual <= opts.tol && m.im > 0.0,
    }
}

fn validate(z: SpectralPoint, phi: f64, opts: &SolverOptions) -> Result<()> {
    if !(z.eta > 0.0) {
        return Err(Error::domain(format!("solve_m needs Im z > 0, got z = {z}")));
    }
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::domain(format!("phi = {phi} must be > 0")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::domain(format!("tolerance {} must be > 0", opts.tol)));
    }
    Ok(())
}

/// Solves for `m(z)` with the default iteration cap.
pub fn solve_m(z: SpectralPoint, psm: &PopulationSpectralMeasure, phi: f64, tol: f64) -> Result<StieltjesSolution> {
    solve_m_with(
        z,
        psm,
        phi,
        SolverOptions {
            tol,
            ..SolverOptions::default()
        },
        None,
    )
}

/// Solves for `m(z)` starting from `init` (default `−1/z`). If the direct
/// iteration stalls, falls back to continuation in `η` from `η = max(1, |z|)`.
pub fn solve_m_with(
    z: SpectralPoint,
    psm: &PopulationSpectralMeasure,
    phi: f64,
    opts: SolverOptions,
    init: Option<Complex64>,
) -> Result<StieltjesSolution> {
    validate(z, phi, &opts)?;
    let zc = z.z();
    let first = iterate(zc, init.unwrap_or(-1.0 / zc), psm, phi, opts);
    let mut total = first.iterations;
    if first.converged {
        return Ok(StieltjesSolution {
            z,
            m: first.m,
            residual: first.residual,
            iterations: total,
        });
    }

    let mut eta = zc.norm().max(1.0);
    let mut m = -1.0 / Complex::new(z.e, eta);
    loop {
        let target = eta <= z.eta;
        let level = Complex::new(z.e, if target { z.eta } else { eta });
        let step = iterate(level, m, psm, phi, opts);
        total += step.iterations;
        if !step.converged {
            return Err(Error::NoConvergence {
                last: step.m,
                residual: step.residual,
                iterations: total,
            });
        }
        m = step.m;
        if target {
            return Ok(StieltjesSolution {
                z,
                m,
                residual: step.residual,
                iterations: total,
            });
        }
        eta /= 4.0;
    }
}

/// Local-law control parameter `Ψ = √(Im m / (Nη)) + 1/(Nη)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocalLawBound {
    pub z: SpectralPoint,
    pub m: Complex64,
    pub n: usize,
    pub psi: f64,
}

pub fn psi(z: SpectralPoint, m: Complex64, n: usize) -> Result<LocalLawBound> {
    if !(z.eta > 0.0) || n == 0 || m.im < 0.0 {
        return Err(Error::domain(format!(
            "psi needs eta > 0, N >= 1 and Im m >= 0 (z = {z}, N = {n}, m = {m})"
        )));
    }
    let n_eta = n as f64 * z.eta;
    Ok(LocalLawBound {
        z,
        m,
        n,
        psi: (m.im / n_eta).sqrt() + 1.0 / n_eta,
    })
}

/// Boundary value `m̌(E) = lim_{η↓0} m(E + iη)` at one point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub e: f64,
    /// Companion boundary value `m̌(E)`.
    pub m_check: Complex64,
    /// Boundary value of the Stieltjes transform of the limiting spectral
    /// measure of `S`.
    pub m_check_s: Complex64,
    /// Disagreement between the last two extrapolations.
    pub uncertainty: f64,
    /// Set when `uncertainty` exceeds the extrapolation tolerance (typically
    /// right at a support edge).
    pub flagged: bool,
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 2 {
        return Err(Error::domain("eta schedule needs at least two levels"));
    }
    if schedule.iter().any(|&h| !(h > 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("eta schedule must be positive and strictly decreasing"));
    }
    if *schedule.last().unwrap() > 1e-6 {
        return Err(Error::domain("eta schedule must reach 1e-6 or below"));
    }
    Ok(())
}

/// Solves down the `η` schedule with warm starts and extrapolates linearly in
/// `η` (real and imaginary parts separately) from the last two levels.
///
/// The extrapolated quantity is the transform of the limiting spectral measure
/// of `S`, `m_S(z) = (m(z) + (1 − φ)/z) / φ`, which for `φ < 1` carries no atom
/// at zero; the companion value is recovered as `m̌ = φ m̌_S − (1 − φ)/E`.
pub fn boundary_value(e: f64, psm: &PopulationSpectralMeasure, phi: f64, schedule: &[f64]) -> Result<BoundaryPoint> {
    check_schedule(schedule)?;
    let opts = SolverOptions::default();
    let mut values = Vec::with_capacity(schedule.len());
    let mut init = None;
    for &eta in schedule {
        let z = SpectralPoint::new(e, eta);
        let sol = solve_m_with(z, psm, phi, opts, init)?;
        init = Some(sol.m);
        values.push(if e == 0.0 { sol.m } else { (sol.m + (1.0 - phi) / z.z()) / phi });
    }
    let extrapolate = |k: usize| {
        let (h0, h1) = (schedule[k - 1], schedule[k]);
        let slope = (values[k - 1] - values[k]) / (h0 - h1);
        values[k] - slope * h1
    };
    let k = values.len() - 1;
    let mut limit = extrapolate(k);
    let uncertainty = if k >= 2 {
        (limit - extrapolate(k - 1)).norm()
    } else {
        (limit - values[k]).norm()
    };
    if limit.im < 0.0 {
        limit.im = 0.0;
    }
    let (m_check, m_check_s) = if e == 0.0 {
        (limit, Complex::new(0.0, 0.0))
    } else {
        (limit * phi - (1.0 - phi) / e, limit)
    };
    Ok(BoundaryPoint {
        e,
        m_check,
        m_check_s,
        uncertainty,
        flagged: uncertainty > EXTRAPOLATION_TOL * (1.0 + limit.norm()),
    })
}

/// Companion density `w(E) = Im m̌(E) / π`.
pub fn companion_density(e: f64, psm: &PopulationSpectralMeasure, phi: f64) -> Result<f64> {
    Ok(boundary_value(e, psm, phi, &DEFAULT_ETA_SCHEDULE)?.m_check.im / std::f64::consts::PI)
}

/// Boundary value of the Stieltjes transform of the limiting spectral measure
/// of `S`: `m̌_S = (m̌ + (1 − φ)/E) / φ` for `E ≠ 0`.
pub fn esd_boundary_value(m_check: Complex64, e: f64, phi: f64) -> Complex64 {
    (m_check + (1.0 - phi) / e) / phi
}

/// Boundary data on a grid of real points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub phi: f64,
    pub grid: Vec<f64>,
    pub m_check: Vec<Complex64>,
    /// Companion density `Im m̌ / π`.
    pub w: Vec<f64>,
    /// `Re m̌ / π`, the Hilbert transform of `w` in the normalization where
    /// `m̌ = π(𝓗w + i w)`.
    pub hilbert_w: Vec<f64>,
    /// Density of the limiting spectral measure of `S` (`w / φ` on `E > 0`).
    pub w_s: Vec<f64>,
    /// `Re m̌_S / π`.
    pub hilbert_w_s: Vec<f64>,
    pub uncertainty: Vec<f64>,
    pub flagged: Vec<bool>,
    /// Support intervals `[a, b]` found on the grid.
    pub edges: Vec<[f64; 2]>,
    /// Mass `(1 − φ)⁺` of the companion measure at zero.
    pub atom_at_zero: f64,
}

impl BoundaryProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `m̌_S` at grid point `k`.
    pub fn m_check_s(&self, k: usize) -> Complex64 {
        Complex::new(self.hilbert_w_s[k], self.w_s[k]) * std::f64::consts::PI
    }

    /// Grid indices lying inside some support interval.
    pub fn in_support(&self, k: usize) -> bool {
        let e = self.grid[k];
        self.edges.iter().any(|[a, b]| e >= *a && e <= *b)
    }
}

/// Evaluates boundary values on `grid` and locates support edges: the
/// companion density is thresholded at [`EDGE_THRESHOLD`] and each crossing is
/// refined by bisection.
pub fn boundary_profile(
    grid: &[f64],
    psm: &PopulationSpectralMeasure,
    phi: f64,
    schedule: &[f64],
) -> Result<BoundaryProfile> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("E grid must be non-empty and strictly increasing"));
    }
    check_schedule(schedule)?;
    let points: Vec<BoundaryPoint> = grid
        .par_iter()
        .map(|&e| boundary_value(e, psm, phi, schedule))
        .collect::<Result<_>>()?;
    let pi = std::f64::consts::PI;
    let m_check: Vec<Complex64> = points.iter().map(|p| p.m_check).collect();
    let w: Vec<f64> = m_check.iter().map(|m| m.im / pi).collect();
    let hilbert_w = m_check.iter().map(|m| m.re / pi).collect();
    let (w_s, hilbert_w_s) = points
        .iter()
        .map(|p| (p.m_check_s.im / pi, p.m_check_s.re / pi))
        .unzip();

    let inside: Vec<bool> = w.iter().map(|&v| v > EDGE_THRESHOLD).collect();
    let density_above = |e: f64| -> Result<bool> {
        Ok(boundary_value(e, psm, phi, schedule)?.m_check.im / pi > EDGE_THRESHOLD)
    };
    let mut edges = Vec::new();
    let mut k = 0;
    while k < grid.len() {
        if !inside[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < grid.len() && inside[k + 1] {
            k += 1;
        }
        let lo = if start == 0 {
            grid[0]
        } else {
            polish_edge(bisect(grid[start - 1], grid[start], &density_above, false)?, psm, phi)
        };
        let hi = if k + 1 == grid.len() {
            grid[k]
        } else {
            polish_edge(bisect(grid[k], grid[k + 1], &density_above, true)?, psm, phi)
        };
        edges.push([lo, hi]);
        k += 1;
    }

    Ok(BoundaryProfile {
        phi,
        grid: grid.to_vec(),
        m_check,
        w,
        hilbert_w,
        w_s,
        hilbert_w_s,
        uncertainty: points.iter().map(|p| p.uncertainty).collect(),
        flagged: points.iter().map(|p| p.flagged).collect(),
        edges,
        atom_at_zero: (1.0 - phi).max(0.0),
    })
}

/// Support edges are critical values of `f` on the real axis. Starting from a
/// bisected edge estimate, Newton on `f'(m) = 0` (real `m`) returns `f(m*)`;
/// falls back to the estimate if the polish wanders off.
fn polish_edge(estimate: f64, psm: &PopulationSpectralMeasure, phi: f64) -> f64 {
    let Ok(p) = boundary_value(estimate, psm, phi, &DEFAULT_ETA_SCHEDULE) else {
        return estimate;
    };
    let f = |m: f64| -1.0 / m + phi * psm.atoms().iter().map(|a| a.weight / (m + 1.0 / a.tau)).sum::<f64>();
    let d1 = |m: f64| 1.0 / (m * m) - phi * psm.atoms().iter().map(|a| a.weight / (m + 1.0 / a.tau).powi(2)).sum::<f64>();
    let d2 = |m: f64| -2.0 / m.powi(3) + 2.0 * phi * psm.atoms().iter().map(|a| a.weight / (m + 1.0 / a.tau).powi(3)).sum::<f64>();
    let mut m = p.m_check.re;
    for _ in 0..50 {
        let step = d1(m) / d2(m);
        if !step.is_finite() {
            return estimate;
        }
        m -= step;
        if step.abs() <= 1e-15 * m.abs().max(1.0) {
            break;
        }
    }
    let edge = f(m);
    if edge.is_finite() && (edge - estimate).abs() < 1e-4 * (1.0 + estimate.abs()) {
        edge
    } else {
        estimate
    }
}

/// Finds the crossing of `inside` in `[a, b]`; `inside_at_a` says which end
/// lies in the support.
fn bisect(mut a: f64, mut b: f64, inside: &impl Fn(f64) -> Result<bool>, inside_at_a: bool) -> Result<f64> {
    while b - a > EDGE_BISECTION_TOL {
        let mid = 0.5 * (a + b);
        if inside(mid)? == inside_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Interval guaranteed to contain the support of the limiting spectral
/// measure of `S` (for `φ < 1`), padded by 5%.
pub fn support_bracket(psm: &PopulationSpectralMeasure, phi: f64) -> (f64, f64) {
    let s = phi.sqrt();
    let lo = if phi < 1.0 {
        psm.tau_min() * (1.0 - s).powi(2)
    } else {
        0.0
    };
    let hi = psm.tau_max() * (1.0 + s).powi(2);
    let pad = 0.05 * (hi - lo);
    ((lo - pad).max(pad * 1e-3), hi + pad)
}

/// Support intervals of the limiting spectral measure of `S`, from a
/// uniform scan of `points` grid points over [`support_bracket`].
pub fn support_edges(psm: &PopulationSpectralMeasure, phi: f64, points: usize) -> Result<Vec<[f64; 2]>> {
    let (lo, hi) = support_bracket(psm, phi);
    let grid = uniform_grid(lo, hi, points.max(2));
    Ok(boundary_profile(&grid, psm, phi, &DEFAULT_ETA_SCHEDULE)?.edges)
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|k| lo + step * k as f64).collect()
}

/// Grid with `per_interval` Chebyshev–Lobatto nodes across each support
/// interval, endpoints pulled inward by `1e-7` relative. Used to tabulate `δ`.
pub fn support_profile(psm: &PopulationSpectralMeasure, phi: f64, per_interval: usize) -> Result<BoundaryProfile> {
    let edges = support_edges(psm, phi, 2000)?;
    let mut grid = Vec::new();
    for [a, b] in &edges {
        let inset = 1e-7 * (b - a);
        let (a, b) = (a + inset, b - inset);
        for k in 0..per_interval {
            let t = std::f64::consts::PI * k as f64 / (per_interval - 1) as f64;
            grid.push(a + (b - a) * (1.0 - t.cos()) / 2.0);
        }
    }
    grid.dedup_by(|x, y| *x <= *y);
    let mut profile = boundary_profile(&grid, psm, phi, &DEFAULT_ETA_SCHEDULE)?;
    profile.edges = edges;
    Ok(profile)
}
