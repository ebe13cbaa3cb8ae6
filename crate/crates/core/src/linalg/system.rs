use serde::{Deserialize, Serialize};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Relative tolerance used to decide whether a reference solution satisfies
/// an equality system: `||A z - b||_inf <= CONSISTENCY_TOL * (1 + ||b||_inf)`.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `a_i . x = b_i`
    Equality,
    /// `a_i . x <= b_i`
    LessEqual,
}

/// Row norms of `A` and the aggregate norms derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct RowNormCache {
    norms: Vec<f64>,
    frobenius_sq: f64,
    max_norm: f64,
}

impl RowNormCache {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        let mut norms = Vec::with_capacity(matrix.nrows());
        for i in 0..matrix.nrows() {
            let sq = matrix.row(i).norm_sq();
            if sq == 0.0 {
                return Err(Error::ZeroRow(i));
            }
            norms.push(sq.sqrt());
        }
        let frobenius_sq = (0..matrix.nrows()).map(|i| matrix.row(i).norm_sq()).sum();
        let max_norm = norms.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            norms,
            frobenius_sq,
            max_norm,
        })
    }

    /// `||a_i||`
    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    /// `||a_i||^2`, which is also the coordinate Lipschitz constant of the dual.
    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norms[i] * self.norms[i]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `||A||_F^2`
    pub fn frobenius_sq(&self) -> f64 {
        self.frobenius_sq
    }

    /// `||A||_{inf,2} = max_i ||a_i||`
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }
}

/// A linear system of equalities and `<=` inequalities, `A x (=|<=) b`.
///
/// Zero rows are rejected: the projection onto such a row is undefined.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    matrix: SparseMatrix,
    rhs: Vec<f64>,
    kinds: Vec<ConstraintKind>,
    reference: Option<Vec<f64>>,
    norms: RowNormCache,
}

impl LinearSystem {
    /// An all-equality system.
    pub fn new(matrix: SparseMatrix, rhs: Vec<f64>) -> Result<Self> {
        let kinds = vec![ConstraintKind::Equality; matrix.nrows()];
        Self::with_kinds(matrix, rhs, kinds)
    }

    pub fn with_kinds(
        matrix: SparseMatrix,
        rhs: Vec<f64>,
        kinds: Vec<ConstraintKind>,
    ) -> Result<Self> {
        if rhs.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                what: "right-hand side",
                expected: matrix.nrows(),
                got: rhs.len(),
            });
        }
        if kinds.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                what: "constraint kinds",
                expected: matrix.nrows(),
                got: kinds.len(),
            });
        }
        if let Some(i) = matrix.zero_rows().next() {
            return Err(Error::ZeroRow(i));
        }
        let norms = RowNormCache::new(&matrix)?;
        Ok(Self {
            matrix,
            rhs,
            kinds,
            reference: None,
            norms,
        })
    }

    /// Attaches a known solution. For all-equality systems the solution is
    /// checked against [`CONSISTENCY_TOL`].
    pub fn with_reference(mut self, reference: Vec<f64>) -> Result<Self> {
        if reference.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                what: "reference solution",
                expected: self.ncols(),
                got: reference.len(),
            });
        }
        if self.is_equality_only() {
            let r = self.residual_vector(&reference)?;
            let res = inf_norm(&r);
            let tolerance = CONSISTENCY_TOL * (1.0 + inf_norm(&self.rhs));
            if res > tolerance {
                return Err(Error::Inconsistent {
                    residual: res,
                    tolerance,
                });
            }
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn kinds(&self) -> &[ConstraintKind] {
        &self.kinds
    }

    pub fn kind(&self, i: usize) -> ConstraintKind {
        self.kinds[i]
    }

    pub fn reference(&self) -> Option<&[f64]> {
        self.reference.as_deref()
    }

    pub fn norms(&self) -> &RowNormCache {
        &self.norms
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_equality_only(&self) -> bool {
        self.kinds.iter().all(|&k| k == ConstraintKind::Equality)
    }

    /// Signed residual of one row, `a_i . x - b_i`.
    pub fn row_residual(&self, i: usize, x: &[f64]) -> f64 {
        self.matrix.row(i).dot_dense(x) - self.rhs[i]
    }

    /// `r = A x - b`.
    pub fn residual_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.matrix.mul_vec(x)?;
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        Ok(r)
    }

    /// Clipped violation `e(r)_i`: the residual for equality rows, its
    /// positive part for `<=` rows.
    pub fn violation(&self, i: usize, residual: f64) -> f64 {
        match self.kinds[i] {
            ConstraintKind::Equality => residual,
            ConstraintKind::LessEqual => residual.max(0.0),
        }
    }

    /// The row-normalized matrix `D^{-1} A`.
    pub fn normalized_matrix(&self) -> Result<SparseMatrix> {
        self.matrix.row_normalized()
    }

    /// Same rows, constraints scaled so every row has unit norm.
    pub fn normalized(&self) -> Result<LinearSystem> {
        let inv: Vec<f64> = self.norms.norms().iter().map(|n| 1.0 / n).collect();
        let matrix = self.matrix.scale_rows(&inv)?;
        let rhs = self.rhs.iter().zip(&inv).map(|(b, s)| b * s).collect();
        let mut sys = LinearSystem::with_kinds(matrix, rhs, self.kinds.clone())?;
        sys.reference = self.reference.clone();
        Ok(sys)
    }
}

/// Free-function form of [`LinearSystem::residual_vector`].
pub fn residual_vector(sys: &LinearSystem, x: &[f64]) -> Result<Vec<f64>> {
    sys.residual_vector(x)
}

/// Rewrites least squares `min ||A x - b||` as the consistent system
///
/// ```text
/// [ A  -I ] [x]   [b]
/// [ 0  A^T] [y] = [0]
/// ```
///
/// in the `n + m` unknowns `(x, y)`. Any zero column of `A` yields a zero
/// row in the second block and is rejected.
pub fn augment_least_squares(a: &SparseMatrix, b: &[f64]) -> Result<LinearSystem> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: m,
            got: b.len(),
        });
    }
    let mut triplets = Vec::with_capacity(2 * a.nnz() + m);
    for (i, j, v) in a.to_triplets() {
        triplets.push((i, j, v));
        triplets.push((m + j, n + i, v));
    }
    for i in 0..m {
        triplets.push((i, n + i, -1.0));
    }
    let matrix = SparseMatrix::from_triplets(m + n, n + m, &triplets)?;
    let mut rhs = b.to_vec();
    rhs.extend(std::iter::repeat_n(0.0, n));
    LinearSystem::new(matrix, rhs)
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
