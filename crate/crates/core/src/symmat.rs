//! Symmetric matrix storage, column-stacking vectorization and the Euclidean
//! projection onto the PSD cone.
//!
//! Vectorization uses the full `n²` layout (`data[j * n + i] = M[i, j]`,
//! 0-based), so `<A, B> = vec(A)ᵀ vec(B)` holds exactly and entry selection
//! on cliques is a Kronecker product of row selectors.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sweep budget for the symmetric QR iteration. Zero would mean unbounded.
const EIGEN_MAX_ITERS: usize = 100_000;

/// Sparse symmetric matrix stored as its upper triangle in coordinate form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    /// `(row, col, value)` with `row <= col`, sorted, no duplicates.
    entries: Vec<(usize, usize, f64)>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, 1.0)).collect(),
        }
    }

    /// Builds a matrix from 0-based coordinates. Lower-triangle coordinates
    /// are mirrored into the upper triangle; a coordinate given twice (in
    /// either triangle) is rejected. Explicit zeros are kept as structural
    /// entries.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut out: Vec<(usize, usize, f64)> = entries
            .into_iter()
            .map(|(i, j, v)| if i <= j { (i, j, v) } else { (j, i, v) })
            .collect();
        for &(i, j, _) in &out {
            if j >= dim {
                return Err(Error::IndexOutOfRange {
                    row: i,
                    col: j,
                    dim,
                });
            }
        }
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(w) = out.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateCoordinate {
                row: w[0].0,
                col: w[0].1,
            });
        }
        Ok(Self { dim, entries: out })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper-triangle coordinates, sorted by `(row, col)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    /// `<self, other>` for a dense column-major `other` of the same dimension.
    pub fn inner_dense(&self, other: &[f64]) -> f64 {
        let n = self.dim;
        self.entries
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v * other[j * n + i]
                } else {
                    v * (other[j * n + i] + other[i * n + j])
                }
            })
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Column-stacked dense image of an `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VecMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl VecMatrix {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        let dim = square_dim(data.len())?;
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.dim + i]
    }
}

/// Result of [`mat`]: the symmetric matrix and whether the input had to be
/// symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct Unvec {
    pub matrix: SymMatrix,
    pub asymmetric: bool,
}

fn square_dim(len: usize) -> Result<usize> {
    let n = (len as f64).sqrt().round() as usize;
    if n == 0 || n * n != len {
        return Err(Error::NonSquareLength(len));
    }
    Ok(n)
}

pub fn vec(m: &SymMatrix) -> VecMatrix {
    let n = m.dim;
    let mut data = vec![0.0; n * n];
    for &(i, j, v) in &m.entries {
        data[j * n + i] = v;
        data[i * n + j] = v;
    }
    VecMatrix { dim: n, data }
}

/// Inverse of [`vec`]. Asymmetric input is replaced by `(X + Xᵀ)/2` and
/// flagged.
pub fn mat(x: &VecMatrix) -> Unvec {
    let n = x.dim;
    let mut asymmetric = false;
    let mut entries = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            let a = x.data[j * n + i];
            let b = x.data[i * n + j];
            if a != b {
                asymmetric = true;
            }
            let v = if a == b { a } else { 0.5 * (a + b) };
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Unvec {
        matrix: SymMatrix { dim: n, entries },
        asymmetric,
    }
}

pub fn project_psd(x: &VecMatrix) -> Result<VecMatrix> {
    let mut data = x.data.clone();
    project_psd_in_place(x.dim, &mut data)?;
    Ok(VecMatrix { dim: x.dim, data })
}

/// Projects the column-major `dim x dim` block in `data` onto the PSD cone,
/// overwriting it.
pub fn project_psd_in_place(dim: usize, data: &mut [f64]) -> Result<()> {
    debug_assert_eq!(data.len(), dim * dim);
    match dim {
        0 => return Ok(()),
        1 => {
            data[0] = data[0].max(0.0);
            return Ok(());
        }
        _ => {}
    }
    for j in 0..dim {
        for i in 0..j {
            let s = 0.5 * (data[j * dim + i] + data[i * dim + j]);
            data[j * dim + i] = s;
            data[i * dim + j] = s;
        }
    }
    let m = DMatrix::from_column_slice(dim, dim, data);
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or(Error::EigenFailure { dim })?;

    let positive: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
    if positive.len() == dim {
        // Already PSD: keep the symmetrized input rather than a reconstruction.
        return Ok(());
    }
    data.iter_mut().for_each(|v| *v = 0.0);
    if positive.is_empty() {
        return Ok(());
    }
    let mut w = DMatrix::zeros(dim, positive.len());
    for (c, &k) in positive.iter().enumerate() {
        let scale = eig.eigenvalues[k].sqrt();
        for i in 0..dim {
            w[(i, c)] = eig.eigenvectors[(i, k)] * scale;
        }
    }
    let p = &w * w.transpose();
    for j in 0..dim {
        for i in 0..=j {
            let s = 0.5 * (p[(i, j)] + p[(j, i)]);
            data[j * dim + i] = s;
            data[i * dim + j] = s;
        }
    }
    Ok(())
}

/// Smallest eigenvalue of the symmetrized column-major block.
pub fn min_eigenvalue(dim: usize, data: &[f64]) -> Result<f64> {
    if dim == 0 {
        return Ok(0.0);
    }
    let m = DMatrix::from_column_slice(dim, dim, data);
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or(Error::EigenFailure { dim })?;
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}
