//! Hoffman-type constants.
//!
//! `sigma_two` is the smallest nonzero singular value of `A`: the largest
//! `s` with `s ||x - x*|| <= ||A (x - x*)||` for every `x` off the solution
//! set, `x*` being the projection of `x` onto it.
//!
//! `sigma_infinity` replaces the Euclidean norm of `A (x - x*)` with the max
//! norm. It is sandwiched in `[sigma_two / sqrt(m), sigma_two]`.

use nalgebra::{DMatrix, DVector};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Largest `m * n` for which a dense SVD is attempted.
pub const DENSE_SIZE_GUARD: usize = 10_000_000;

/// Largest number of active-set candidates examined by the generic
/// `sigma_infinity` oracle.
pub const VERTEX_CANDIDATE_GUARD: usize = 2_000_000;

/// Largest column count accepted by the generic `sigma_infinity` oracle.
pub const SIGMA_INF_MAX_COLS: usize = 3;

fn check_dense_guard(m: usize, n: usize) -> Result<()> {
    let size = m.saturating_mul(n);
    if size > DENSE_SIZE_GUARD {
        return Err(Error::SizeGuard {
            what: "dense factorization m*n",
            size,
            limit: DENSE_SIZE_GUARD,
        });
    }
    Ok(())
}

/// Numerical-rank threshold `max(m, n) * eps * sigma_max`.
pub fn rank_tolerance(m: usize, n: usize, sigma_max: f64) -> f64 {
    m.max(n) as f64 * f64::EPSILON * sigma_max
}

fn singular_values(d: &DMatrix<f64>) -> Vec<f64> {
    if d.nrows() == 0 || d.ncols() == 0 {
        return Vec::new();
    }
    d.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// Smallest singular value of a dense matrix above the rank tolerance, or 0
/// for a numerically zero matrix.
pub fn smallest_nonzero_singular_value(d: &DMatrix<f64>) -> f64 {
    let sv = singular_values(d);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0.0;
    }
    let tol = rank_tolerance(d.nrows(), d.ncols(), smax);
    sv.into_iter()
        .filter(|&s| s > tol)
        .fold(f64::INFINITY, f64::min)
}

/// `sigma(A, 2)`: the smallest nonzero singular value of `A`.
pub fn sigma_two(a: &SparseMatrix) -> Result<f64> {
    check_dense_guard(a.nrows(), a.ncols())?;
    Ok(smallest_nonzero_singular_value(&a.to_dense()))
}

/// Orthonormal basis (as columns, `n x r`) of the row space of `d`.
fn row_space_basis(d: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = d.shape();
    if m == 0 || n == 0 {
        return DMatrix::zeros(n, 0);
    }
    // pad to at least n rows so the SVD returns a full set of right vectors
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(d);
        p
    } else {
        d.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = rank_tolerance(m, n, smax);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > tol)
        .collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        for j in 0..n {
            basis[(j, c)] = vt[(k, j)];
        }
    }
    basis
}

/// Orthonormal basis (columns) of the null space of `c`, using `scale` as
/// the magnitude reference for the rank threshold.
fn null_space_basis(c: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let (m, r) = c.shape();
    if r == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m == 0 {
        return DMatrix::identity(r, r);
    }
    let rows = m.max(r);
    let mut padded = DMatrix::zeros(rows, r);
    padded.view_mut((0, 0), (m, r)).copy_from(c);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let tol = rank_tolerance(m, r, scale);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= tol)
        .collect();
    let mut basis = DMatrix::zeros(r, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        for j in 0..r {
            basis[(j, col)] = vt[(k, j)];
        }
    }
    basis
}

/// Hoffman constant of the active rows restricted to the error subspace of
/// an adaptive state: the infimum of `||A_K w|| / ||w||` over nonzero `w` in
/// the row space of `A` orthogonal to every inactive row.
///
/// Errors of iterates whose inactive rows are satisfied live in that
/// subspace. Returns `None` when the subspace is trivial, i.e. every such
/// iterate is already a solution.
pub fn restricted_sigma_two(a: &SparseMatrix, active: &[bool]) -> Result<Option<f64>> {
    if active.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "active flags",
            expected: a.nrows(),
            got: active.len(),
        });
    }
    check_dense_guard(a.nrows(), a.ncols())?;
    let dense = a.to_dense();
    let smax = singular_values(&dense).into_iter().fold(0.0, f64::max);
    let basis = row_space_basis(&dense);
    let inactive: Vec<usize> = (0..a.nrows()).filter(|&i| !active[i]).collect();
    let act: Vec<usize> = (0..a.nrows()).filter(|&i| active[i]).collect();

    let w = if inactive.is_empty() {
        basis.clone()
    } else {
        let c = a.rows_to_dense(&inactive) * &basis;
        let z = null_space_basis(&c, smax);
        &basis * z
    };
    if w.ncols() == 0 {
        return Ok(None);
    }
    let ak = a.rows_to_dense(&act) * &w;
    if ak.nrows() < ak.ncols() {
        // more error directions than active rows: some direction is invisible
        return Ok(Some(0.0));
    }
    let sv = singular_values(&ak);
    Ok(Some(sv.into_iter().fold(f64::INFINITY, f64::min)))
}

/// How `sigma_infinity` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaInfMethod {
    /// `(sum_i 1 / lambda_i^2)^{-1/2}` for a diagonal matrix.
    DiagonalClosedForm,
    /// Exact maximization of `||u||` over the vertices of `{u : ||B u||_inf <= 1}`.
    VertexEnumeration,
}

/// `sigma(A, inf)` for diagonal matrices (any size) or matrices with at most
/// three columns.
///
/// The generic path works in the row space of `A` with reduced matrix `B`.
/// There `1 / sigma_inf = max { ||u|| : ||B u||_inf <= 1 }`, the maximum of a
/// convex function over a bounded polytope, which is attained at a vertex.
/// Vertices are enumerated from active sets of `rank` constraints.
pub fn sigma_infinity_oracle(a: &SparseMatrix) -> Result<(f64, SigmaInfMethod)> {
    if a.is_diagonal() {
        let inv_sq: f64 = (0..a.nrows())
            .map(|i| {
                let l = a.row(i).values[0];
                1.0 / (l * l)
            })
            .sum();
        return Ok((inv_sq.powf(-0.5), SigmaInfMethod::DiagonalClosedForm));
    }
    if a.ncols() > SIGMA_INF_MAX_COLS {
        return Err(Error::SizeGuard {
            what: "sigma_infinity oracle columns",
            size: a.ncols(),
            limit: SIGMA_INF_MAX_COLS,
        });
    }
    let dense = a.to_dense();
    let basis = row_space_basis(&dense);
    let d = basis.ncols();
    if d == 0 {
        return Ok((0.0, SigmaInfMethod::VertexEnumeration));
    }
    let b = &dense * &basis;
    let m = b.nrows();
    let candidates = binomial(m, d).saturating_mul(1 << (d - 1));
    if candidates > VERTEX_CANDIDATE_GUARD {
        return Err(Error::SizeGuard {
            what: "sigma_infinity vertex candidates",
            size: candidates,
            limit: VERTEX_CANDIDATE_GUARD,
        });
    }

    let mut best_sq = 0.0f64;
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        let sub = DMatrix::from_fn(d, d, |r, c| b[(subset[r], c)]);
        if let Some(lu) = sub.clone().lu().try_inverse() {
            for signs in 0..(1usize << (d - 1)) {
                let rhs = DVector::from_fn(d, |r, _| {
                    if r > 0 && (signs >> (r - 1)) & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                });
                let u = &lu * rhs;
                let feasible = (0..m).all(|i| (b.row(i) * &u)[0].abs() <= 1.0 + 1e-9);
                if feasible {
                    best_sq = best_sq.max(u.norm_squared());
                }
            }
        }
        if !next_combination(&mut subset, m) {
            break;
        }
    }
    if best_sq == 0.0 {
        return Ok((0.0, SigmaInfMethod::VertexEnumeration));
    }
    Ok((1.0 / best_sq.sqrt(), SigmaInfMethod::VertexEnumeration))
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigma_two_diagonal_and_identity() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(sigma_two(&a).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            sigma_two(&SparseMatrix::identity(5)).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn sigma_two_rank_deficient() {
        // A^T A = diag(2, 0): the only nonzero singular value is sqrt(2)
        let a = SparseMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(sigma_two(&a).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn sigma_two_guard() {
        let a = SparseMatrix::from_triplets(10_000, 2_000, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(
            sigma_two(&a).unwrap_err(),
            Error::SizeGuard { .. }
        ));
    }

    #[test]
    fn sigma_inf_diagonal_closed_form() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let (s, method) = sigma_infinity_oracle(&a).unwrap();
        assert_eq!(method, SigmaInfMethod::DiagonalClosedForm);
        assert_abs_diff_eq!(s, (4.0f64 / 5.0).sqrt(), epsilon = 1e-15);
        let (s, _) = sigma_infinity_oracle(&SparseMatrix::identity(7)).unwrap();
        assert_abs_diff_eq!(s, 1.0 / 7f64.sqrt(), epsilon = 1e-15);
        let (s, _) = sigma_infinity_oracle(&SparseMatrix::identity(1)).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn sigma_inf_vertex_path_matches_closed_form_on_rotated_diagonal() {
        // dense 2x2 with orthogonal rows of norms 1 and 2: same as diag(1, 2)
        let c = 0.6f64;
        let s = 0.8f64;
        let a = SparseMatrix::from_dense_rows(&[vec![c, s], vec![-2.0 * s, 2.0 * c]]).unwrap();
        let (v, method) = sigma_infinity_oracle(&a).unwrap();
        assert_eq!(method, SigmaInfMethod::VertexEnumeration);
        assert_abs_diff_eq!(v, (4.0f64 / 5.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn sigma_inf_rank_one() {
        // single direction: ||A w||_inf on the unit row-space vector
        let a = SparseMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let (v, _) = sigma_infinity_oracle(&a).unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sigma_inf_column_guard() {
        let a = SparseMatrix::from_dense_rows(&[vec![1.0, 1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(
            sigma_infinity_oracle(&a).unwrap_err(),
            Error::SizeGuard { .. }
        ));
    }

    #[test]
    fn restricted_sigma_counterexample() {
        // rows (1,0) and (1,1); with row 0 inactive the error lies on (0,1),
        // where ||a_1 . w|| = 1 although the smallest singular value of a_1 is sqrt 2
        let a = SparseMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s = restricted_sigma_two(&a, &[false, true]).unwrap().unwrap();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        let full = restricted_sigma_two(&a, &[true, true]).unwrap().unwrap();
        assert_abs_diff_eq!(full, sigma_two(&a).unwrap(), epsilon = 1e-12);
        assert_eq!(restricted_sigma_two(&a, &[false, false]).unwrap(), None);
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, binomial(5, 2));
    }
}
