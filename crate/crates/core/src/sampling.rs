//! Gaussian data matrices and sample covariance matrices.
//!
//! `X` is `M × N` with i.i.d. centred Gaussian entries of variance `1/N`, and
//! `S = Σ^{1/2} X X* Σ^{1/2}`, so that `E S = Σ`. Column `j` of `X` is drawn
//! from its own ChaCha stream `(seed, j)`, which makes the output independent
//! of how columns are scheduled across threads.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral_core::{hermitian_eigen, ModelConfig, PopulationCovariance, SampleEigensystem, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T: Scalar = f64> {
    entries: DMatrix<T>,
    seed: u64,
}

impl<T: Scalar> DataMatrix<T> {
    /// Wraps an existing matrix (e.g. for hand-built test cases).
    pub fn from_entries(entries: DMatrix<T>, seed: u64) -> Self {
        Self { entries, seed }
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }
}

/// Draws `X` for `config`; the scalar type must match `config.field`.
pub fn sample_data<T: Scalar>(config: &ModelConfig, seed: u64) -> Result<DataMatrix<T>> {
    if config.field != T::FIELD {
        return Err(Error::domain(format!(
            "config asks for the {:?} field but {:?} entries were requested",
            config.field,
            T::FIELD
        )));
    }
    let (m, n) = (config.m, config.n);
    let variance = 1.0 / n as f64;
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            (0..m).map(|_| T::gaussian(&mut rng, variance)).collect()
        })
        .collect();
    let entries = DMatrix::from_fn(m, n, |i, j| columns[j][i]);
    Ok(DataMatrix { entries, seed })
}

#[derive(Debug, Clone)]
pub struct SampleCovariance<T: Scalar = f64> {
    eigensystem: SampleEigensystem<T>,
}

impl<T: Scalar> SampleCovariance<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        self.eigensystem.source()
    }

    pub fn eigensystem(&self) -> &SampleEigensystem<T> {
        &self.eigensystem
    }

    pub fn into_eigensystem(self) -> SampleEigensystem<T> {
        self.eigensystem
    }

    pub fn trace(&self) -> f64 {
        self.eigensystem.eigenvalues().iter().sum()
    }
}

fn check_dims<T: Scalar>(sigma: &PopulationCovariance<T>, x: &DataMatrix<T>) -> Result<()> {
    if sigma.dim() != x.m() {
        return Err(Error::Dimension {
            context: "sample covariance (rows of X vs dim Σ)",
            expected: sigma.dim(),
            found: x.m(),
        });
    }
    Ok(())
}

/// `S = Σ^{1/2} X X* Σ^{1/2}` (Hermitian to rounding).
pub fn covariance_matrix<T: Scalar>(sigma: &PopulationCovariance<T>, x: &DataMatrix<T>) -> Result<DMatrix<T>> {
    check_dims(sigma, x)?;
    let y = sigma.sqrt_mul(x.entries());
    let s = &y * y.adjoint();
    Ok((&s + s.adjoint()) * T::from_real(0.5))
}

pub fn sample_cov<T: Scalar>(sigma: &PopulationCovariance<T>, x: &DataMatrix<T>) -> Result<SampleCovariance<T>> {
    let s = covariance_matrix(sigma, x)?;
    Ok(SampleCovariance {
        eigensystem: SampleEigensystem::from_matrix(s)?,
    })
}

/// Eigenvalues of `S` only, descending.
pub fn sample_spectrum<T: Scalar>(sigma: &PopulationCovariance<T>, x: &DataMatrix<T>) -> Result<Vec<f64>> {
    let s = covariance_matrix(sigma, x)?;
    let n = s.nrows();
    let values = s.symmetric_eigenvalues();
    let mut v: Vec<f64> = values.iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen(format!("{n}x{n} eigenvalue computation produced non-finite values")));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Eigensystem of `X* Σ X` (the `N × N` companion), mostly for cross-checks.
pub fn companion_eigenvalues<T: Scalar>(sigma: &PopulationCovariance<T>, x: &DataMatrix<T>) -> Result<Vec<f64>> {
    check_dims(sigma, x)?;
    let y = sigma.sqrt_mul(x.entries());
    let c = y.adjoint() * &y;
    Ok(hermitian_eigen((&c + c.adjoint()) * T::from_real(0.5))?.0)
}

/// Magic prefix of the binary eigensystem sidecar.
pub const EIGENSYSTEM_MAGIC: &[u8; 6] = b"LPEIG1";

/// Writes the eigensystem sidecar. Layout (little-endian):
///
/// ```text
/// b"LPEIG1" | M: u64 | N: u64 | seed: u64 | λ_1..λ_M: f64 | U row-major: M·M f64
/// ```
pub fn write_eigensystem<W: Write>(mut out: W, eig: &SampleEigensystem, n: usize, seed: u64) -> std::io::Result<()> {
    let m = eig.dim();
    out.write_all(EIGENSYSTEM_MAGIC)?;
    for v in [m as u64, n as u64, seed] {
        out.write_all(&v.to_le_bytes())?;
    }
    for &l in eig.eigenvalues() {
        out.write_all(&l.to_le_bytes())?;
    }
    let u = eig.vectors();
    for i in 0..m {
        for j in 0..m {
            out.write_all(&u[(i, j)].to_le_bytes())?;
        }
    }
    out.flush()
}

/// Contents of an eigensystem sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct EigensystemFile {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn read_eigensystem<R: Read>(mut input: R) -> Result<EigensystemFile> {
    let mut magic = [0u8; 6];
    let io = |e| Error::Parse(format!("eigensystem sidecar: {e}"));
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != EIGENSYSTEM_MAGIC {
        return Err(Error::Parse("eigensystem sidecar: bad magic".into()));
    }
    let mut word = [0u8; 8];
    let mut header = [0u64; 3];
    for h in &mut header {
        input.read_exact(&mut word).map_err(io)?;
        *h = u64::from_le_bytes(word);
    }
    let [m, n, seed] = header;
    let m = m as usize;
    let mut read_f64 = || -> Result<f64> {
        input.read_exact(&mut word).map_err(io)?;
        Ok(f64::from_le_bytes(word))
    };
    let eigenvalues = (0..m).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
    let flat = (0..m * m).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
    Ok(EigensystemFile {
        m,
        n: n as usize,
        seed,
        eigenvalues,
        vectors: DMatrix::from_row_slice(m, m, &flat),
    })
}

pub fn write_eigensystem_file(path: &Path, eig: &SampleEigensystem, n: usize, seed: u64) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_eigensystem(std::io::BufWriter::new(file), eig, n, seed).map_err(|e| Error::io(path, e))
}
