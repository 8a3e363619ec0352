use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Complex, ComplexField, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Real or complex field for matrices and samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    #[default]
    Real,
    Complex,
}

/// Entry type of every dense matrix in the crate: `f64` or `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    const FIELD: Field;

    fn to_complex(self) -> Complex64;

    /// Draws a centred Gaussian with the given total variance. For the complex
    /// field the variance is split evenly between real and imaginary parts.
    fn gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Self;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn to_complex(self) -> Complex64 {
        Complex::new(self, 0.0)
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Self {
        let g: f64 = rng.sample(StandardNormal);
        g * variance.sqrt()
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn to_complex(self) -> Complex64 {
        self
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Self {
        let s = (variance / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * s, im * s)
    }
}

/// A point `z = E + iη` of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub e: f64,
    pub eta: f64,
}

impl SpectralPoint {
    pub fn new(e: f64, eta: f64) -> Self {
        Self { e, eta }
    }

    pub fn z(&self) -> Complex64 {
        Complex::new(self.e, self.eta)
    }

    pub fn in_upper_half_plane(&self) -> bool {
        self.eta > 0.0
    }
}

impl From<Complex64> for SpectralPoint {
    fn from(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }
}

impl fmt::Display for SpectralPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.eta.is_sign_negative() {
            write!(f, "{}-{}i", self.e, -self.eta)
        } else {
            write!(f, "{}+{}i", self.e, self.eta)
        }
    }
}

/// Parses `RE+IMi` / `RE-IMi` (no spaces), e.g. `1+1i`, `-2-0.5i`, `1e-3+1e-2i`.
impl FromStr for SpectralPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("complex number {s:?}: expected RE+IMi"));
        let body = s.strip_suffix('i').ok_or_else(bad)?;
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| {
                (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E')
            })
            .ok_or_else(bad)?;
        let re: f64 = body[..split].parse().map_err(|_| bad())?;
        let im: f64 = body[split..].parse().map_err(|_| bad())?;
        Ok(Self::new(re, im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsmAtom {
    pub tau: f64,
    pub weight: f64,
}

/// Population spectral measure: a probability measure on the population
/// eigenvalues, atoms sorted by descending `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PsmAtom>", into = "Vec<PsmAtom>")]
pub struct PopulationSpectralMeasure {
    atoms: Vec<PsmAtom>,
}

impl TryFrom<Vec<PsmAtom>> for PopulationSpectralMeasure {
    type Error = Error;

    fn try_from(atoms: Vec<PsmAtom>) -> Result<Self> {
        Self::new(atoms)
    }
}

impl From<PopulationSpectralMeasure> for Vec<PsmAtom> {
    fn from(p: PopulationSpectralMeasure) -> Self {
        p.atoms
    }
}

/// Weights whose sum is within this distance of 1 are renormalized; anything
/// further off is rejected.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

impl PopulationSpectralMeasure {
    pub fn new(mut atoms: Vec<PsmAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("population spectral measure has no atoms"));
        }
        for a in &atoms {
            if !(a.tau.is_finite() && a.tau > 0.0) {
                return Err(Error::domain(format!("atom location tau = {} must be > 0", a.tau)));
            }
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::domain(format!("atom weight {} must be > 0", a.weight)));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::domain(format!("atom weights sum to {total}, expected 1")));
        }
        for a in &mut atoms {
            a.weight /= total;
        }
        atoms.sort_by(|a, b| b.tau.total_cmp(&a.tau));
        Ok(Self { atoms })
    }

    pub fn point(tau: f64) -> Result<Self> {
        Self::new(vec![PsmAtom { tau, weight: 1.0 }])
    }

    pub fn identity() -> Self {
        Self::point(1.0).expect("unit atom is valid")
    }

    /// Uniform measure on the given eigenvalues; repeated values are merged.
    pub fn from_eigenvalues(taus: &[f64]) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::domain("no eigenvalues"));
        }
        let mut sorted = taus.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let w = 1.0 / taus.len() as f64;
        let mut atoms: Vec<PsmAtom> = Vec::new();
        for tau in sorted {
            match atoms.last_mut() {
                Some(last) if last.tau == tau => last.weight += w,
                _ => atoms.push(PsmAtom { tau, weight: w }),
            }
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[PsmAtom] {
        &self.atoms
    }

    pub fn tau_max(&self) -> f64 {
        self.atoms[0].tau
    }

    pub fn tau_min(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].tau
    }

    /// `∫ x dπ(x)`.
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.tau * a.weight).sum()
    }

    /// Checks the regularity box used by all experiments: atoms in [0.5, 5], phi in [0.1, 0.9].
    pub fn check_regular(&self, phi: f64) -> Result<()> {
        if !(0.1..=0.9).contains(&phi) {
            return Err(Error::domain(format!("phi = {phi} outside [0.1, 0.9]")));
        }
        if self.tau_min() < 0.5 || self.tau_max() > 5.0 {
            return Err(Error::domain(format!(
                "population eigenvalues [{}, {}] outside [0.5, 5]",
                self.tau_min(),
                self.tau_max()
            )));
        }
        Ok(())
    }

    /// Diagonal covariance of dimension `m` whose eigenvalue multiplicities
    /// follow the weights (largest-remainder rounding).
    pub fn diagonal_covariance(&self, m: usize) -> Result<PopulationCovariance> {
        if m == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        let exact: Vec<f64> = self.atoms.iter().map(|a| a.weight * m as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut missing = m - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &k in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            counts[k] += 1;
            missing -= 1;
        }
        let taus: Vec<f64> = self
            .atoms
            .iter()
            .zip(&counts)
            .flat_map(|(a, &c)| std::iter::repeat_n(a.tau, c))
            .collect();
        PopulationCovariance::diagonal(taus)
    }

    /// Reads CSV with header `tau,weight`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["tau", "weight"] {
            return Err(Error::Parse(format!(
                "expected header `tau,weight`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut atoms = Vec::new();
        for rec in rdr.deserialize::<PsmAtom>() {
            atoms.push(rec.map_err(|e| Error::Parse(e.to_string()))?);
        }
        Self::new(atoms)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
        for a in &self.atoms {
            w.serialize(a).map_err(|e| Error::Csv {
                path: path.into(),
                source: e,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Matrix dimensions of one draw of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub field: Field,
}

impl ModelConfig {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::domain(format!("dimensions must be >= 1 (M = {m}, N = {n})")));
        }
        Ok(Self {
            m,
            n,
            field: Field::Real,
        })
    }

    /// `M = round(phi * N)`.
    pub fn with_ratio(phi: f64, n: usize) -> Result<Self> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::domain(format!("phi = {phi} must be > 0")));
        }
        Self::new((phi * n as f64).round() as usize, n)
    }

    pub fn complex(mut self) -> Self {
        self.field = Field::Complex;
        self
    }

    pub fn phi(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// `Σ = V diag(τ) V*`; `frame == None` means `V = I`, i.e. `Σ = diag(τ)` with
/// the diagonal in the stored order.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationCovariance<T: Scalar = f64> {
    taus: Vec<f64>,
    frame: Option<DMatrix<T>>,
}

impl<T: Scalar> PopulationCovariance<T> {
    pub fn diagonal(taus: Vec<f64>) -> Result<Self> {
        Self::check_taus(&taus)?;
        Ok(Self { taus, frame: None })
    }

    pub fn with_frame(taus: Vec<f64>, frame: DMatrix<T>) -> Result<Self> {
        Self::check_taus(&taus)?;
        if frame.nrows() != taus.len() || frame.ncols() != taus.len() {
            return Err(Error::Dimension {
                context: "population covariance frame",
                expected: taus.len(),
                found: frame.nrows().max(frame.ncols()),
            });
        }
        let defect = unitary_defect(&frame);
        if defect > 1e-10 {
            return Err(Error::domain(format!("frame is not unitary (defect {defect:.3e})")));
        }
        Ok(Self {
            taus,
            frame: Some(frame),
        })
    }

    fn check_taus(taus: &[f64]) -> Result<()> {
        if taus.is_empty() {
            return Err(Error::domain("covariance must have dimension >= 1"));
        }
        if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::domain(format!("covariance eigenvalue {t} is not positive")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.taus.len()
    }

    /// Eigenvalues in frame order (the diagonal when `frame` is `None`).
    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn frame(&self) -> Option<&DMatrix<T>> {
        self.frame.as_ref()
    }

    pub fn is_diagonal(&self) -> bool {
        self.frame.is_none()
    }

    /// Eigenvalues sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut t = self.taus.clone();
        t.sort_by(|a, b| b.total_cmp(a));
        t
    }

    pub fn trace(&self) -> f64 {
        self.taus.iter().sum()
    }

    pub fn inverse_trace(&self) -> f64 {
        self.taus.iter().map(|t| 1.0 / t).sum()
    }

    pub fn empirical_psm(&self) -> PopulationSpectralMeasure {
        PopulationSpectralMeasure::from_eigenvalues(&self.taus).expect("taus validated")
    }

    /// `g(Σ) = V g(D) V*`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> DMatrix<T> {
        let n = self.dim();
        let d = DMatrix::<T>::from_fn(n, n, |i, j| {
            if i == j {
                T::from_real(g(self.taus[i]))
            } else {
                T::zero()
            }
        });
        match &self.frame {
            None => d,
            Some(v) => v * d * v.adjoint(),
        }
    }

    pub fn matrix(&self) -> DMatrix<T> {
        self.map(|t| t)
    }

    /// `Σ^{1/2} x` without forming `Σ^{1/2}` when `Σ` is diagonal.
    pub fn sqrt_mul(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match &self.frame {
            None => {
                let mut y = x.clone();
                for (i, mut row) in y.row_iter_mut().enumerate() {
                    row *= T::from_real(self.taus[i].sqrt());
                }
                y
            }
            Some(_) => self.map(f64::sqrt) * x,
        }
    }

    /// `diag(U* Σ U)`, i.e. `u_i* Σ u_i` for each column of `u`.
    pub fn quadratic_forms(&self, u: &DMatrix<T>) -> Vec<f64> {
        match &self.frame {
            None => u
                .column_iter()
                .map(|col| {
                    col.iter()
                        .zip(&self.taus)
                        .map(|(x, t)| x.modulus_squared() * t)
                        .sum()
                })
                .collect(),
            Some(v) => {
                let w = v.adjoint() * u;
                w.column_iter()
                    .map(|col| {
                        col.iter()
                            .zip(&self.taus)
                            .map(|(x, t)| x.modulus_squared() * t)
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

pub(crate) fn unitary_defect<T: Scalar>(u: &DMatrix<T>) -> f64 {
    let prod = u.adjoint() * u;
    let n = prod.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)].to_complex() - target).norm());
        }
    }
    worst
}

pub(crate) fn hermitian_defect<T: Scalar>(a: &DMatrix<T>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)].to_complex() - a[(j, i)].to_complex().conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// descending; ties keep the solver's output order.
pub(crate) fn hermitian_eigen<T: Scalar>(a: DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("{n}x{n} Hermitian eigensolver failed")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Spectral decomposition `S = U L U*` of a sample covariance matrix.
#[derive(Debug, Clone)]
pub struct SampleEigensystem<T: Scalar = f64> {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<T>,
    source: DMatrix<T>,
}

impl<T: Scalar> SampleEigensystem<T> {
    pub fn from_matrix(s: DMatrix<T>) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::domain(format!(
                "sample covariance must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let scale = s.iter().map(|x| x.modulus()).fold(1.0f64, f64::max);
        let defect = hermitian_defect(&s);
        if defect > 1e-10 * scale {
            return Err(Error::domain(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        let sym = (&s + s.adjoint()) * T::from_real(0.5);
        let (eigenvalues, vectors) = hermitian_eigen(sym)?;
        Ok(Self {
            eigenvalues,
            vectors,
            source: s,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `λ_1 ≥ … ≥ λ_M`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the eigenvectors `u_i`, in the order of `eigenvalues`.
    pub fn vectors(&self) -> &DMatrix<T> {
        &self.vectors
    }

    pub fn source(&self) -> &DMatrix<T> {
        &self.source
    }

    pub fn orthonormality_defect(&self) -> f64 {
        unitary_defect(&self.vectors)
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (c, mut col) in scaled.column_iter_mut().enumerate() {
            col *= T::from_real(self.eigenvalues[c]);
        }
        scaled * self.vectors.adjoint()
    }

    /// `‖U L U* − S‖_F / ‖S‖_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let diff = self.reconstruct() - &self.source;
        diff.norm() / self.source.norm().max(f64::MIN_POSITIVE)
    }
}

/// A finite weighted sum of Dirac masses, kept sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

impl AtomicMeasure {
    /// Atoms as `(location, weight)` pairs.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::domain(format!("atom location {x} is not finite")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::domain(format!("atom weight {w} must be >= 0")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Mass of `(-∞, x)`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.0 < x);
        self.atoms[..k].iter().map(|a| a.1).sum()
    }

    /// Mass of `[a, b)`.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.atoms
            .iter()
            .filter(|(x, _)| *x >= a && *x < b)
            .map(|a| a.1)
            .sum()
    }

    /// Cumulative masses of `(-∞, g_k)` for an increasing grid, in one pass.
    pub fn cumulative_below(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        let mut k = 0;
        let mut acc = 0.0;
        for &g in grid {
            while k < self.atoms.len() && self.atoms[k].0 < g {
                acc += self.atoms[k].1;
                k += 1;
            }
            out.push(acc);
        }
        out
    }
}
