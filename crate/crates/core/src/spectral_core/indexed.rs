use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use nalgebra::DMatrix;

use super::types::Complex64;
use crate::error::{Error, Result};

/// A dense complex matrix whose rows and columns carry labels from finite
/// ordered index sets. Products contract only over shared labels.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedMatrix<L = usize> {
    rows: Vec<L>,
    cols: Vec<L>,
    data: DMatrix<Complex64>,
}

impl<L: Clone + Eq + Hash + Debug> IndexedMatrix<L> {
    pub fn new(rows: Vec<L>, cols: Vec<L>, data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != rows.len() {
            return Err(Error::Dimension {
                context: "indexed matrix rows",
                expected: rows.len(),
                found: data.nrows(),
            });
        }
        if data.ncols() != cols.len() {
            return Err(Error::Dimension {
                context: "indexed matrix columns",
                expected: cols.len(),
                found: data.ncols(),
            });
        }
        for labels in [&rows, &cols] {
            let mut seen = HashMap::with_capacity(labels.len());
            for l in labels {
                if seen.insert(l, ()).is_some() {
                    return Err(Error::domain(format!("duplicate index label {l:?}")));
                }
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> &[L] {
        &self.rows
    }

    pub fn cols(&self) -> &[L] {
        &self.cols
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn get(&self, r: &L, c: &L) -> Option<Complex64> {
        let i = self.rows.iter().position(|l| l == r)?;
        let j = self.cols.iter().position(|l| l == c)?;
        Some(self.data[(i, j)])
    }

    /// The submatrix with row and column `label` deleted (if present).
    pub fn without(&self, label: &L) -> Self {
        let keep_r: Vec<usize> = (0..self.rows.len()).filter(|&i| &self.rows[i] != label).collect();
        let keep_c: Vec<usize> = (0..self.cols.len()).filter(|&j| &self.cols[j] != label).collect();
        Self {
            rows: keep_r.iter().map(|&i| self.rows[i].clone()).collect(),
            cols: keep_c.iter().map(|&j| self.cols[j].clone()).collect(),
            data: DMatrix::from_fn(keep_r.len(), keep_c.len(), |i, j| self.data[(keep_r[i], keep_c[j])]),
        }
    }

    /// Inverse of a square matrix indexed by `J × J`; the result is indexed by
    /// `J × J` as well.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::domain("inverse requires identical row and column index sets"));
        }
        let inv = self.data.clone().try_inverse().ok_or(Error::Singular {
            what: "indexed matrix",
            condition: f64::INFINITY,
        })?;
        Ok(Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: inv,
        })
    }

    /// The minor `S^{(i)} = (A restricted to J \ {i})^{-1}`.
    pub fn minor_inverse(&self, label: &L) -> Result<Self> {
        self.without(label).inverse()
    }
}

impl IndexedMatrix<usize> {
    /// Labels `0..n` on both axes.
    pub fn from_dense(data: DMatrix<Complex64>) -> Self {
        Self {
            rows: (0..data.nrows()).collect(),
            cols: (0..data.ncols()).collect(),
            data,
        }
    }
}

/// `(AB)_{ij} = Σ_{k ∈ cols(A) ∩ rows(B)} A_{ik} B_{kj}`. Disjoint inner index
/// sets give the zero matrix.
pub fn indexed_matmul<L: Clone + Eq + Hash + Debug>(a: &IndexedMatrix<L>, b: &IndexedMatrix<L>) -> IndexedMatrix<L> {
    let b_rows: HashMap<&L, usize> = b.rows.iter().enumerate().map(|(k, l)| (l, k)).collect();
    let shared: Vec<(usize, usize)> = a
        .cols
        .iter()
        .enumerate()
        .filter_map(|(ka, l)| b_rows.get(l).map(|&kb| (ka, kb)))
        .collect();
    let data = DMatrix::from_fn(a.rows.len(), b.cols.len(), |i, j| {
        shared
            .iter()
            .map(|&(ka, kb)| a.data[(i, ka)] * b.data[(kb, j)])
            .sum()
    });
    IndexedMatrix {
        rows: a.rows.clone(),
        cols: b.cols.clone(),
        data,
    }
}
