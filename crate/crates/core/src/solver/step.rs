use crate::error::{Error, Result};
use crate::linalg::{dist_sq, ConstraintKind, LinearSystem};
use crate::selection::CoordinateDelta;

fn check_row(sys: &LinearSystem, x: &[f64], i: usize) -> Result<()> {
    if x.len() != sys.ncols() {
        return Err(Error::DimensionMismatch {
            what: "iterate",
            expected: sys.ncols(),
            got: x.len(),
        });
    }
    if i >= sys.nrows() {
        return Err(Error::IndexOutOfBounds {
            index: i,
            len: sys.nrows(),
        });
    }
    Ok(())
}

/// Projects `x` in place onto row `i` (onto its halfspace for `<=` rows) and
/// appends the changed coordinates to `deltas`. A satisfied row leaves `x`
/// untouched.
pub fn project_in_place(
    sys: &LinearSystem,
    x: &mut [f64],
    i: usize,
    deltas: &mut Vec<CoordinateDelta>,
) -> Result<()> {
    check_row(sys, x, i)?;
    let beta = sys.violation(i, sys.row_residual(i, x));
    if beta == 0.0 {
        return Ok(());
    }
    let t = beta / sys.norms().norm_sq(i);
    for (j, a) in sys.matrix().row(i).iter() {
        let old = x[j];
        let new = old - t * a;
        if new != old {
            x[j] = new;
            deltas.push(CoordinateDelta { index: j, old, new });
        }
    }
    Ok(())
}

/// `x + (b_i - a_i . x) / ||a_i||^2 a_i` for an equality row.
pub fn kaczmarz_step(sys: &LinearSystem, x: &[f64], i: usize) -> Result<Vec<f64>> {
    check_row(sys, x, i)?;
    if sys.kind(i) != ConstraintKind::Equality {
        return Err(Error::KindMismatch(i));
    }
    kaczmarz_inequality_step(sys, x, i)
}

/// `x - beta / ||a_i||^2 a_i` with `beta` the residual of an equality row or
/// its positive part for a `<=` row.
pub fn kaczmarz_inequality_step(sys: &LinearSystem, x: &[f64], i: usize) -> Result<Vec<f64>> {
    let mut next = x.to_vec();
    project_in_place(sys, &mut next, i, &mut Vec::new())?;
    Ok(next)
}

/// Discrepancy in the per-step identity
/// `||x+ - x*||^2 = ||x - x*||^2 - (a_i . x - b_i)^2 / ||a_i||^2`.
pub fn step_identity_check(
    sys: &LinearSystem,
    x_before: &[f64],
    x_after: &[f64],
    i: usize,
    x_star: &[f64],
) -> Result<f64> {
    check_row(sys, x_before, i)?;
    if sys.kind(i) != ConstraintKind::Equality {
        return Err(Error::KindMismatch(i));
    }
    for (what, v) in [("iterate after step", x_after), ("solution", x_star)] {
        if v.len() != sys.ncols() {
            return Err(Error::DimensionMismatch {
                what,
                expected: sys.ncols(),
                got: v.len(),
            });
        }
    }
    let r = sys.row_residual(i, x_before);
    let lhs = dist_sq(x_after, x_star);
    let rhs = dist_sq(x_before, x_star) - r * r / sys.norms().norm_sq(i);
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;

    fn sys(rows: &[Vec<f64>], b: &[f64]) -> LinearSystem {
        LinearSystem::new(SparseMatrix::from_dense_rows(rows).unwrap(), b.to_vec()).unwrap()
    }

    fn halfspace() -> LinearSystem {
        LinearSystem::with_kinds(
            SparseMatrix::from_dense_rows(&[vec![1.0, 0.0]]).unwrap(),
            vec![1.0],
            vec![ConstraintKind::LessEqual],
        )
        .unwrap()
    }

    #[test]
    fn identity_step() {
        let s = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 2.0]);
        assert_eq!(kaczmarz_step(&s, &[0.0, 0.0], 0).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn projection_onto_a_line() {
        let s = sys(&[vec![1.0, 1.0]], &[3.0]);
        let x = kaczmarz_step(&s, &[0.0, 0.0], 0).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-15 && (x[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn satisfied_row_is_a_no_op() {
        let s = sys(&[vec![1.0, 1.0]], &[3.0]);
        let x = [1.0, 2.0];
        assert_eq!(kaczmarz_step(&s, &x, 0).unwrap(), x.to_vec());
        let mut deltas = Vec::new();
        let mut y = x;
        project_in_place(&s, &mut y, 0, &mut deltas).unwrap();
        assert!(deltas.is_empty());
    }

    #[test]
    fn inequality_cases() {
        let h = halfspace();
        assert_eq!(
            kaczmarz_inequality_step(&h, &[2.0, 0.0], 0).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            kaczmarz_inequality_step(&h, &[0.5, 0.0], 0).unwrap(),
            vec![0.5, 0.0]
        );
        assert_eq!(
            kaczmarz_step(&h, &[2.0, 0.0], 0).unwrap_err(),
            Error::KindMismatch(0)
        );
    }

    #[test]
    fn equality_rows_agree_between_step_kinds() {
        let s = sys(&[vec![2.0, -1.0, 0.5]], &[0.7]);
        let x = [0.3, -0.2, 1.1];
        assert_eq!(
            kaczmarz_step(&s, &x, 0).unwrap(),
            kaczmarz_inequality_step(&s, &x, 0).unwrap()
        );
    }

    #[test]
    fn only_the_row_support_moves() {
        let s = sys(&[vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 0.0]], &[5.0, 1.0]);
        let x = [0.1, 0.2, 0.3];
        let y = kaczmarz_step(&s, &x, 0).unwrap();
        assert_eq!(y[1], x[1]);
        assert!((s.row_residual(0, &y)).abs() <= 1e-12 * 6.0);
    }

    #[test]
    fn identity_discrepancy_vanishes() {
        let s = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 2.0]);
        let x0 = [0.0, 0.0];
        let x1 = kaczmarz_step(&s, &x0, 1).unwrap();
        assert_eq!(
            step_identity_check(&s, &x0, &x1, 1, &[1.0, 2.0]).unwrap(),
            0.0
        );
        let x2 = kaczmarz_step(&s, &x1, 1).unwrap();
        assert_eq!(
            step_identity_check(&s, &x1, &x2, 1, &[1.0, 2.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn bad_dimensions() {
        let s = sys(&[vec![1.0, 0.0]], &[1.0]);
        assert!(matches!(
            kaczmarz_step(&s, &[0.0], 0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            kaczmarz_step(&s, &[0.0, 0.0], 3),
            Err(Error::IndexOutOfBounds { .. })
        ));
    }
}
