use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ConstraintKind, LinearSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `||e(Ax - b)||_inf`
    pub gap: f64,
    /// Exact distance to the feasible set, for systems where the projection
    /// has a closed form.
    pub distance: Option<f64>,
}

/// Largest clipped violation `max_i |e(a_i . x - b_i)|`.
pub fn max_violation(sys: &LinearSystem, residuals: &[f64]) -> f64 {
    residuals
        .iter()
        .enumerate()
        .fold(0.0, |acc, (i, &r)| acc.max(sys.violation(i, r).abs()))
}

pub fn feasibility_gap(sys: &LinearSystem, x: &[f64]) -> Result<FeasibilityReport> {
    let r = sys.residual_vector(x)?;
    Ok(FeasibilityReport {
        gap: max_violation(sys, &r),
        distance: analytic_distance(sys, x)?,
    })
}

/// Distance from `x` to the feasible set when it is a single hyperplane or
/// halfspace, or an axis-aligned box (every row has one nonzero). `None` for
/// other systems and for empty boxes.
pub fn analytic_distance(sys: &LinearSystem, x: &[f64]) -> Result<Option<f64>> {
    if x.len() != sys.ncols() {
        return Err(Error::DimensionMismatch {
            what: "iterate",
            expected: sys.ncols(),
            got: x.len(),
        });
    }
    if sys.nrows() == 1 {
        let r = sys.row_residual(0, x);
        return Ok(Some(sys.violation(0, r).abs() / sys.norms().norm(0)));
    }
    let a = sys.matrix();
    if a.max_row_nnz() != 1 {
        return Ok(None);
    }
    let n = sys.ncols();
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for i in 0..sys.nrows() {
        let row = a.row(i);
        let (j, v) = (row.indices[0], row.values[0]);
        let bound = sys.rhs()[i] / v;
        match sys.kind(i) {
            ConstraintKind::Equality => {
                lo[j] = lo[j].max(bound);
                hi[j] = hi[j].min(bound);
            }
            ConstraintKind::LessEqual if v > 0.0 => hi[j] = hi[j].min(bound),
            ConstraintKind::LessEqual => lo[j] = lo[j].max(bound),
        }
    }
    let mut d2 = 0.0;
    for j in 0..n {
        if lo[j] > hi[j] {
            return Ok(None);
        }
        let gap = if x[j] < lo[j] {
            lo[j] - x[j]
        } else if x[j] > hi[j] {
            x[j] - hi[j]
        } else {
            0.0
        };
        d2 += gap * gap;
    }
    Ok(Some(d2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;

    #[test]
    fn single_halfspace() {
        let sys = LinearSystem::with_kinds(
            SparseMatrix::from_dense_rows(&[vec![1.0, 0.0]]).unwrap(),
            vec![1.0],
            vec![ConstraintKind::LessEqual],
        )
        .unwrap();
        let rep = feasibility_gap(&sys, &[3.0, 0.0]).unwrap();
        assert_eq!(rep.gap, 2.0);
        assert_eq!(rep.distance, Some(2.0));
        let rep = feasibility_gap(&sys, &[0.0, 5.0]).unwrap();
        assert_eq!(
            rep,
            FeasibilityReport {
                gap: 0.0,
                distance: Some(0.0)
            }
        );
    }

    #[test]
    fn mixed_system_takes_the_worst_row() {
        let sys = LinearSystem::with_kinds(
            SparseMatrix::from_dense_rows(&[vec![1.0, 1.0], vec![1.0, -1.0], vec![0.0, 1.0]])
                .unwrap(),
            vec![1.0, 0.0, 0.5],
            vec![
                ConstraintKind::LessEqual,
                ConstraintKind::Equality,
                ConstraintKind::LessEqual,
            ],
        )
        .unwrap();
        // residuals: 3 - 1 = 2, 2 - 1 = 1, 1 - 0.5 = 0.5
        let rep = feasibility_gap(&sys, &[2.0, 1.0]).unwrap();
        assert_eq!(rep.gap, 2.0);
        assert_eq!(rep.distance, None);
        // inequality rows satisfied, equality row off by -0.5
        let rep = feasibility_gap(&sys, &[0.0, 0.5]).unwrap();
        assert_eq!(rep.gap, 0.5);
    }

    #[test]
    fn box_distance() {
        // 0 <= x0 <= 1, x1 = 2 written as -x1 <= -2 and x1 <= 2
        let sys = LinearSystem::with_kinds(
            SparseMatrix::from_triplets(
                4,
                2,
                &[(0, 0, -1.0), (1, 0, 2.0), (2, 1, -1.0), (3, 1, 1.0)],
            )
            .unwrap(),
            vec![0.0, 2.0, -2.0, 2.0],
            vec![ConstraintKind::LessEqual; 4],
        )
        .unwrap();
        let d = analytic_distance(&sys, &[4.0, -2.0]).unwrap().unwrap();
        assert!((d - 5.0).abs() < 1e-15);
        assert_eq!(analytic_distance(&sys, &[0.5, 2.0]).unwrap(), Some(0.0));
    }

    #[test]
    fn empty_box_has_no_distance() {
        let sys = LinearSystem::with_kinds(
            SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, -1.0)]).unwrap(),
            vec![0.0, -1.0],
            vec![ConstraintKind::LessEqual; 2],
        )
        .unwrap();
        assert_eq!(analytic_distance(&sys, &[0.0]).unwrap(), None);
    }
}
