//! Greedy coordinate descent on `f(x) = 1/2 ||Ax - b||^2`, used as a
//! comparator. Gauss-Southwell picks the largest `|grad_j|`;
//! Gauss-Southwell-Lipschitz divides by `||col_j||`, the square root of the
//! coordinate Lipschitz constant.

use serde::{Deserialize, Serialize};

use super::heap::{ResidualHeap, ScoreMode};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CdRule {
    GaussSouthwell,
    GaussSouthwellLipschitz,
}

impl CdRule {
    pub fn label(self) -> &'static str {
        match self {
            CdRule::GaussSouthwell => "GS",
            CdRule::GaussSouthwellLipschitz => "GSL",
        }
    }

    fn mode(self) -> ScoreMode {
        match self {
            CdRule::GaussSouthwell => ScoreMode::Residual,
            CdRule::GaussSouthwellLipschitz => ScoreMode::Distance,
        }
    }
}

fn column_norms(a: &SparseMatrix) -> Vec<f64> {
    (0..a.ncols()).map(|j| a.col(j).norm_sq().sqrt()).collect()
}

fn check_dims(a: &SparseMatrix, b: &[f64], x: &[f64]) -> Result<()> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    if x.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            what: "iterate",
            expected: a.ncols(),
            got: x.len(),
        });
    }
    Ok(())
}

/// One exact coordinate minimization from `x`, recomputing the gradient from
/// scratch. Returns the chosen column and the new iterate.
pub fn cd_select_and_step(
    a: &SparseMatrix,
    b: &[f64],
    x: &[f64],
    rule: CdRule,
) -> Result<(usize, Vec<f64>)> {
    check_dims(a, b, x)?;
    let r: Vec<f64> = a
        .mul_vec(x)?
        .iter()
        .zip(b)
        .map(|(ax, bi)| ax - bi)
        .collect();
    let g = a.transpose_mul_vec(&r)?;
    let norms = column_norms(a);
    let heap = ResidualHeap::build(&g, &norms, rule.mode());
    let (j, _) = heap.peek().ok_or(Error::DimensionMismatch {
        what: "columns",
        expected: 1,
        got: 0,
    })?;
    if norms[j] == 0.0 {
        return Err(Error::ZeroColumn(j));
    }
    let mut next = x.to_vec();
    next[j] -= g[j] / (norms[j] * norms[j]);
    Ok((j, next))
}

/// Coordinate descent with the gradient kept in an addressable heap. A step
/// on column `j` changes `grad_l` only for columns `l` sharing a row with `j`.
pub struct CoordinateDescent<'a> {
    a: &'a SparseMatrix,
    rule: CdRule,
    x: Vec<f64>,
    r: Vec<f64>,
    col_norm_sq: Vec<f64>,
    heap: ResidualHeap,
}

impl<'a> CoordinateDescent<'a> {
    pub fn new(a: &'a SparseMatrix, b: &[f64], x0: &[f64], rule: CdRule) -> Result<Self> {
        check_dims(a, b, x0)?;
        let r: Vec<f64> = a
            .mul_vec(x0)?
            .iter()
            .zip(b)
            .map(|(ax, bi)| ax - bi)
            .collect();
        let g = a.transpose_mul_vec(&r)?;
        let norms = column_norms(a);
        Ok(Self {
            a,
            rule,
            x: x0.to_vec(),
            r,
            col_norm_sq: norms.iter().map(|n| n * n).collect(),
            heap: ResidualHeap::build(&g, &norms, rule.mode()),
        })
    }

    pub fn rule(&self) -> CdRule {
        self.rule
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `Ax - b`
    pub fn residual(&self) -> &[f64] {
        &self.r
    }

    pub fn sq_error(&self) -> f64 {
        self.r.iter().map(|v| v * v).sum()
    }

    /// Current gradient `A^T (Ax - b)`.
    pub fn gradient(&self) -> &[f64] {
        self.heap.residuals()
    }

    /// Performs one step and returns the chosen column.
    pub fn step(&mut self) -> Result<usize> {
        let (j, _) = self.heap.peek().ok_or(Error::DimensionMismatch {
            what: "columns",
            expected: 1,
            got: 0,
        })?;
        if self.col_norm_sq[j] == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        let delta = -self.heap.residual(j) / self.col_norm_sq[j];
        if delta == 0.0 {
            return Ok(j);
        }
        self.x[j] += delta;
        let a = self.a;
        for (i, aij) in a.col(j).iter() {
            self.r[i] += aij * delta;
            for (l, ail) in a.row(i).iter() {
                if l != j {
                    self.heap.add_to_residual(l, ail * aij * delta);
                }
            }
        }
        self.heap.set_residual(j, 0.0);
        Ok(j)
    }
}
