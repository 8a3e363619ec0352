//! Empirical spectral measures of `S` and their deterministic limits.
//!
//! Empirical measures are M-normalized: `μ̂` puts mass `1/M` on each sample
//! eigenvalue and `ν̂` puts `u_i*Σu_i / M` on `λ_i`. They are compared with
//! the limiting spectral measure `ϱ_S` of `S` (or with `δ dϱ_S`) through
//! masses of intervals `[a, b)`.

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp_law::{boundary_value, support_bracket, support_edges, uniform_grid, DEFAULT_ETA_SCHEDULE};
use crate::quad;
use crate::shrinkage::delta;
use crate::spectral_core::{AtomicMeasure, Complex64, PopulationCovariance, PopulationSpectralMeasure, SampleEigensystem, Scalar};

/// Absolute tolerance requested from the quadrature on each piece.
pub const QUAD_TOL: f64 = 1e-9;

/// Grid resolution used to locate support edges in [`DeterministicMeasure::from_law`].
const EDGE_SCAN_POINTS: usize = 2000;

/// `(μ̂, ν̂)` for a sample eigensystem.
pub fn empirical_measures<T: Scalar>(
    eigensystem: &SampleEigensystem<T>,
    sigma: &PopulationCovariance<T>,
) -> Result<(AtomicMeasure, AtomicMeasure)> {
    if eigensystem.dim() != sigma.dim() {
        return Err(Error::Dimension {
            context: "empirical measures",
            expected: sigma.dim(),
            found: eigensystem.dim(),
        });
    }
    let m = eigensystem.dim() as f64;
    let lam = eigensystem.eigenvalues();
    let o = sigma.quadratic_forms(eigensystem.vectors());
    let mu = AtomicMeasure::new(lam.iter().map(|&l| (l, 1.0 / m)).collect())?;
    let nu = AtomicMeasure::new(lam.iter().zip(o).map(|(&l, w)| (l, w / m)).collect())?;
    Ok((mu, nu))
}

/// `F_x = Σ_i |u_i* x|² δ_{λ_i}` for a unit vector `x`.
pub fn vector_measure<T: Scalar>(eigensystem: &SampleEigensystem<T>, x: &DVector<T>) -> Result<AtomicMeasure> {
    if x.len() != eigensystem.dim() {
        return Err(Error::Dimension {
            context: "vector measure",
            expected: eigensystem.dim(),
            found: x.len(),
        });
    }
    let norm = x.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!("vector measure needs a unit vector, got norm {norm}")));
    }
    let proj = eigensystem.vectors().adjoint() * x;
    AtomicMeasure::new(
        eigensystem
            .eigenvalues()
            .iter()
            .zip(proj.iter())
            .map(|(&l, p)| (l, p.modulus_squared()))
            .collect(),
    )
}

/// Half-open interval `[a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a > b {
            return Err(Error::domain(format!("invalid interval [{a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x < self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Limit of the spectral measure of `X*ΣX`, with an atom `1 − φ` at 0.
    Companion,
    /// Limit of the spectral measure of `S`.
    EsdOfS,
}

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Law { psm: PopulationSpectralMeasure, phi: f64 },
    Density(DensityFn),
}

/// Optional weight applied to the density before integrating.
#[derive(Clone, Copy)]
pub enum Weight<'a> {
    Unit,
    /// The shrinkage function `δ` with `c = φ`; only for measures built from
    /// a population law.
    Delta,
    Custom(&'a (dyn Fn(f64) -> f64 + Sync)),
}

/// An absolutely continuous measure on finitely many support intervals, plus
/// an optional atom.
#[derive(Clone)]
pub struct DeterministicMeasure {
    source: Source,
    /// Support intervals, increasing.
    pub support: Vec<[f64; 2]>,
    /// Range over which the density is known; outside it the measure is
    /// unspecified.
    pub domain: [f64; 2],
    /// `(location, mass)`.
    pub atom: Option<(f64, f64)>,
    pub normalization: Normalization,
}

impl std::fmt::Debug for DeterministicMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeterministicMeasure")
            .field("support", &self.support)
            .field("domain", &self.domain)
            .field("atom", &self.atom)
            .field("normalization", &self.normalization)
            .finish()
    }
}

impl DeterministicMeasure {
    /// The limiting spectral measure of `S` (or the companion measure) for a
    /// population law and `φ ∈ (0, 1)`.
    pub fn from_law(psm: &PopulationSpectralMeasure, phi: f64, normalization: Normalization) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::domain(format!("deterministic measures need 0 < phi < 1, got {phi}")));
        }
        let support = support_edges(psm, phi, EDGE_SCAN_POINTS)?;
        let (lo, hi) = support_bracket(psm, phi);
        let atom = match normalization {
            Normalization::Companion => Some((0.0, 1.0 - phi)),
            Normalization::EsdOfS => None,
        };
        Ok(Self {
            source: Source::Law { psm: psm.clone(), phi },
            support,
            domain: [lo.min(0.0), hi],
            atom,
            normalization,
        })
    }

    /// A measure given by an explicit density on `support`, known on `domain`.
    pub fn from_density(
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: Vec<[f64; 2]>,
        domain: [f64; 2],
        atom: Option<(f64, f64)>,
        normalization: Normalization,
    ) -> Result<Self> {
        if support.iter().any(|[a, b]| !(a < b)) || support.windows(2).any(|w| w[1][0] < w[0][1]) {
            return Err(Error::domain("support intervals must be non-empty, increasing and disjoint"));
        }
        if support.iter().any(|[a, b]| *a < domain[0] || *b > domain[1]) {
            return Err(Error::domain("support must lie inside the domain"));
        }
        Ok(Self {
            source: Source::Density(Arc::new(density)),
            support,
            domain,
            atom,
            normalization,
        })
    }

    fn law_point(&self, e: f64) -> Result<Option<(f64, Complex64)>> {
        match &self.source {
            Source::Law { psm, phi } => {
                let p = boundary_value(e, psm, *phi, &DEFAULT_ETA_SCHEDULE)?;
                let scale = match self.normalization {
                    Normalization::Companion => *phi,
                    Normalization::EsdOfS => 1.0,
                };
                Ok(Some((scale * p.m_check_s.im.max(0.0) / std::f64::consts::PI, p.m_check_s)))
            }
            Source::Density(_) => Ok(None),
        }
    }

    fn in_support(&self, e: f64) -> bool {
        self.support.iter().any(|[a, b]| e >= *a && e <= *b)
    }

    pub fn density(&self, e: f64) -> Result<f64> {
        if !self.in_support(e) {
            return Ok(0.0);
        }
        match &self.source {
            Source::Density(f) => Ok(f(e)),
            Source::Law { .. } => Ok(self.law_point(e)?.expect("law source").0),
        }
    }

    /// `weight(e) · density(e)`.
    pub fn weighted_density(&self, e: f64, weight: Weight<'_>) -> Result<f64> {
        if !self.in_support(e) {
            return Ok(0.0);
        }
        match weight {
            Weight::Unit => self.density(e),
            Weight::Custom(g) => Ok(g(e) * self.density(e)?),
            Weight::Delta => {
                let (dens, m_s) = self
                    .law_point(e)?
                    .ok_or_else(|| Error::domain("delta weight needs a measure built from a population law"))?;
                let phi = match &self.source {
                    Source::Law { phi, .. } => *phi,
                    Source::Density(_) => unreachable!(),
                };
                if dens == 0.0 {
                    return Ok(0.0);
                }
                Ok(delta(e, m_s, phi)? * dens)
            }
        }
    }

    fn weight_at_atom(&self, loc: f64, weight: Weight<'_>) -> Result<f64> {
        match weight {
            Weight::Unit => Ok(1.0),
            Weight::Custom(g) => Ok(g(loc)),
            Weight::Delta => Err(Error::domain("delta weight is undefined at the atom at zero")),
        }
    }

    /// Mass of `[a, b)` under `weight · dϱ`, including the atom.
    pub fn mass(&self, interval: Interval, weight: Weight<'_>) -> Result<f64> {
        self.check_coverage(interval)?;
        let mut total = 0.0;
        for &[lo, hi] in &self.support {
            let (a, b) = (interval.a.max(lo), interval.b.min(hi));
            if b > a {
                total += self.integrate(a, b, weight)?;
            }
        }
        if let Some((loc, mass)) = self.atom {
            if interval.contains(loc) {
                total += mass * self.weight_at_atom(loc, weight)?;
            }
        }
        Ok(total)
    }

    fn integrate(&self, a: f64, b: f64, weight: Weight<'_>) -> Result<f64> {
        let failure = RefCell::new(None);
        let value = quad::integrate(
            |e| match self.weighted_density(e, weight) {
                Ok(v) => v,
                Err(err) => {
                    failure.borrow_mut().get_or_insert(err);
                    0.0
                }
            },
            a,
            b,
            QUAD_TOL,
        );
        match failure.into_inner() {
            Some(err) => Err(err),
            None => Ok(value),
        }
    }

    fn check_coverage(&self, interval: Interval) -> Result<()> {
        let [lo, hi] = self.domain;
        let boundary_density = |e: f64| self.density(e).map(|d| d > 1e-12);
        if (interval.a < lo && boundary_density(lo)?) || (interval.b > hi && boundary_density(hi)?) {
            return Err(Error::Coverage {
                a: interval.a,
                b: interval.b,
            });
        }
        Ok(())
    }

    /// Weighted masses of `(-∞, g_k)` for an increasing grid, one quadrature
    /// per cell (cells evaluated in parallel).
    pub fn cumulative_below(&self, grid: &[f64], weight: Weight<'_>) -> Result<Vec<f64>> {
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("grid must be increasing"));
        }
        if grid.is_empty() {
            return Ok(Vec::new());
        }
        let head = self.mass(Interval::new(grid[0].min(self.domain[0]), grid[0])?, weight)?;
        let cells: Vec<f64> = grid
            .par_windows(2)
            .map(|w| self.mass(Interval::new(w[0], w[1])?, weight))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = head;
        out.push(acc);
        for c in cells {
            acc += c;
            out.push(acc);
        }
        Ok(out)
    }

    /// Lowest and highest support edge.
    pub fn support_hull(&self) -> Option<[f64; 2]> {
        Some([self.support.first()?[0], self.support.last()?[1]])
    }
}

/// `deterministic(I)` with an optional weight on the density.
pub fn deterministic_mass(measure: &DeterministicMeasure, interval: Interval, weight: Weight<'_>) -> Result<f64> {
    measure.mass(interval, weight)
}

/// Deterministic side of the interval distance, computed once and reused for
/// many empirical measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalGrid {
    pub grid: Vec<f64>,
    /// Deterministic mass of `(-∞, g_k)`.
    pub cumulative: Vec<f64>,
}

impl IntervalGrid {
    /// Uniform endpoint grid of `grid_size` points over
    /// `[edge_low − 0.1, edge_high + 0.1]`.
    pub fn new(deterministic: &DeterministicMeasure, weight: Weight<'_>, grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::domain("interval grid needs at least two points"));
        }
        let [lo, hi] = deterministic
            .support_hull()
            .ok_or_else(|| Error::domain("deterministic measure has empty support"))?;
        let grid = uniform_grid(lo - 0.1, hi + 0.1, grid_size);
        let cumulative = deterministic.cumulative_below(&grid, weight)?;
        Ok(Self { grid, cumulative })
    }

    /// `sup_{a<b} |empirical([g_a, g_b)) − deterministic([g_a, g_b))|`, which is
    /// `max_k H_k − min_k H_k` for `H_k = E(g_k) − D(g_k)`.
    pub fn distance(&self, empirical: &AtomicMeasure) -> f64 {
        let e = empirical.cumulative_below(&self.grid);
        let (lo, hi) = e
            .iter()
            .zip(&self.cumulative)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h), hi.max(h)));
        hi - lo
    }
}

/// Sup over intervals with endpoints on a `grid_size`-point grid of
/// `|empirical(I) − ∫_I weight dϱ|`.
pub fn interval_sup_distance(
    empirical: &AtomicMeasure,
    deterministic: &DeterministicMeasure,
    weight: Weight<'_>,
    grid_size: usize,
) -> Result<f64> {
    Ok(IntervalGrid::new(deterministic, weight, grid_size)?.distance(empirical))
}

/// `sup_x |E(x) − D(x)|` over the given points, with the empirical
/// distribution function taken on both sides of each point.
pub fn kolmogorov_distance(
    empirical: &AtomicMeasure,
    deterministic: &DeterministicMeasure,
    weight: Weight<'_>,
    points: &[f64],
) -> Result<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let det = deterministic.cumulative_below(&pts, weight)?;
    let below = empirical.cumulative_below(&pts);
    let mut worst: f64 = 0.0;
    for ((&x, &d), &e_lt) in pts.iter().zip(&det).zip(&below) {
        let at: f64 = empirical.atoms().iter().filter(|a| a.0 == x).map(|a| a.1).sum();
        worst = worst.max((e_lt - d).abs()).max((e_lt + at - d).abs());
    }
    Ok(worst)
}
