//! Sparse matrix with both row-major and column-major adjacency.
//!
//! The greedy residual update walks the columns touched by a row update and
//! then every row touching each of those columns, so both views are kept.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A borrowed sparse row or column: sorted indices with matching values.
#[derive(Debug, Clone, Copy)]
pub struct SparseVecView<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseVecView<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * x[j]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Dot product of two sparse vectors by merging their sorted supports.
    pub fn dot_sparse(&self, other: &SparseVecView<'_>) -> f64 {
        let (mut p, mut q) = (0, 0);
        let mut acc = 0.0;
        while p < self.indices.len() && q < other.indices.len() {
            match self.indices[p].cmp(&other.indices[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[p] * other.values[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }
}

/// Compressed storage of an `nrows x ncols` real matrix, held in both CSR and
/// CSC form. Explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows {
                return Err(Error::IndexOutOfBounds {
                    index: i,
                    len: nrows,
                });
            }
            if j >= ncols {
                return Err(Error::IndexOutOfBounds {
                    index: j,
                    len: ncols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            entries.push((i, j, v));
        }
        entries.sort_by_key(|a| (a.0, a.1));

        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);

        let mut row_ptr = vec![0usize; nrows + 1];
        for &(i, _, _) in &merged {
            row_ptr[i + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let row_idx: Vec<usize> = merged.iter().map(|e| e.1).collect();
        let row_val: Vec<f64> = merged.iter().map(|e| e.2).collect();

        let mut col_ptr = vec![0usize; ncols + 1];
        for &(_, j, _) in &merged {
            col_ptr[j + 1] += 1;
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut next = col_ptr.clone();
        let mut col_idx = vec![0usize; merged.len()];
        let mut col_val = vec![0.0; merged.len()];
        // merged is row-major, so rows land in each column in increasing order
        for &(i, j, v) in &merged {
            let slot = next[j];
            col_idx[slot] = i;
            col_val[slot] = v;
            next[j] += 1;
        }

        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        })
    }

    /// Builds a matrix from dense row slices.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    what: "dense row length",
                    expected: ncols,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets).expect("identity is well formed")
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let triplets: Vec<_> = values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(n, n, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn row(&self, i: usize) -> SparseVecView<'_> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        SparseVecView {
            indices: &self.row_idx[s..e],
            values: &self.row_val[s..e],
        }
    }

    pub fn col(&self, j: usize) -> SparseVecView<'_> {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        SparseVecView {
            indices: &self.col_idx[s..e],
            values: &self.col_val[s..e],
        }
    }

    /// Value at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row(i);
        match row.indices.binary_search(&j) {
            Ok(p) => row.values[p],
            Err(_) => 0.0,
        }
    }

    /// Largest number of nonzeros in any row (`r` in the cost analysis).
    pub fn max_row_nnz(&self) -> usize {
        (0..self.nrows)
            .map(|i| self.row(i).nnz())
            .max()
            .unwrap_or(0)
    }

    /// Largest number of nonzeros in any column (`c` in the cost analysis).
    pub fn max_col_nnz(&self) -> usize {
        (0..self.ncols)
            .map(|j| self.col(j).nnz())
            .max()
            .unwrap_or(0)
    }

    pub fn zero_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nrows).filter(|&i| self.row_ptr[i] == self.row_ptr[i + 1])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                what: "vector length vs columns",
                expected: self.ncols,
                got: x.len(),
            });
        }
        Ok((0..self.nrows).map(|i| self.row(i).dot_dense(x)).collect())
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                what: "vector length vs rows",
                expected: self.nrows,
                got: y.len(),
            });
        }
        Ok((0..self.ncols).map(|j| self.col(j).dot_dense(y)).collect())
    }

    pub fn transpose(&self) -> Self {
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: self.col_ptr.clone(),
            row_idx: self.col_idx.clone(),
            row_val: self.col_val.clone(),
            col_ptr: self.row_ptr.clone(),
            col_idx: self.row_idx.clone(),
            col_val: self.row_val.clone(),
        }
    }

    /// Row-major triplet list of the stored nonzeros.
    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i).iter() {
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i).iter() {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Dense copy of a subset of rows, in the given order.
    pub fn rows_to_dense(&self, rows: &[usize]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(rows.len(), self.ncols);
        for (p, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i).iter() {
                d[(p, j)] = v;
            }
        }
        d
    }

    /// Scales row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                what: "row scale factors",
                expected: self.nrows,
                got: factors.len(),
            });
        }
        let triplets: Vec<_> = self
            .to_triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, v * factors[i]))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// Returns `D^{-1} A` where `D = diag(||a_i||)`, so every row has unit norm.
    pub fn row_normalized(&self) -> Result<Self> {
        let mut factors = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            let norm = self.row(i).norm_sq().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroRow(i));
            }
            factors.push(1.0 / norm);
        }
        self.scale_rows(&factors)
    }

    /// True when the matrix is square with exactly the diagonal stored.
    pub fn is_diagonal(&self) -> bool {
        self.nrows == self.ncols
            && (0..self.nrows).all(|i| {
                let r = self.row(i);
                r.nnz() == 1 && r.indices[0] == i
            })
    }
}
