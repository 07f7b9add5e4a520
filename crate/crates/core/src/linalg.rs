//! Small dense helpers on top of nalgebra: numerical rank, deterministic
//! null-space bases and least-squares solves.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Machine epsilon for `f64`.
pub const EPS: f64 = f64::EPSILON;

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Singular values of `m`, largest first. Empty for degenerate shapes.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let mut s = m.clone().svd(false, false).singular_values;
    s.as_mut_slice()
        .sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    s
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Default rank threshold `max(rows, cols) * ||m||_2 * rel`.
pub fn rank_threshold(m: &DMatrix<f64>, rel: f64) -> f64 {
    let k = m.nrows().max(m.ncols()) as f64;
    k * spectral_norm(m) * rel
}

/// Number of singular values strictly above `tol`.
pub fn rank_with_tol(m: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > tol).count()
}

/// Numerical rank with the default relative threshold.
pub fn rank(m: &DMatrix<f64>) -> usize {
    rank_with_tol(m, rank_threshold(m, EPS))
}

/// Ratio of the largest to the smallest singular value (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    if s.is_empty() {
        return 1.0;
    }
    let lo = s[s.len() - 1];
    if lo == 0.0 {
        f64::INFINITY
    } else {
        s[0] / lo
    }
}

fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Orthonormal basis of the row space of `m`, built by greedy pivoting over
/// the rows (largest residual first, lowest index on ties). Exactly `r`
/// vectors are returned.
fn row_space_basis(m: &DMatrix<f64>, r: usize) -> Vec<DVector<f64>> {
    let rows: Vec<DVector<f64>> = (0..m.nrows()).map(|i| m.row(i).transpose()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut used = alloc::vec![false; rows.len()];
    while basis.len() < r {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for (i, row) in rows.iter().enumerate() {
            if used[i] {
                continue;
            }
            let mut v = row.clone();
            orthogonalize(&mut v, &basis);
            let nv = v.norm();
            if best.as_ref().map_or(true, |b| nv > b.2) {
                best = Some((i, v, nv));
            }
        }
        match best {
            Some((i, v, nv)) if nv > 0.0 => {
                used[i] = true;
                basis.push(v / nv);
            }
            _ => break,
        }
    }
    basis
}

/// Orthonormal basis (as columns) of the null space `{x : m x = 0}`.
///
/// The rank is decided from singular values with threshold `tol`; the basis
/// is then completed deterministically from the standard basis vectors with
/// largest-residual pivoting, so repeated calls are bit-identical.
pub fn null_space_with_tol(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let r = rank_with_tol(m, tol);
    let mut basis = row_space_basis(m, r);
    let start = basis.len();
    let mut used = alloc::vec![false; n];
    while basis.len() < n {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for k in 0..n {
            if used[k] {
                continue;
            }
            let mut v = DVector::zeros(n);
            v[k] = 1.0;
            orthogonalize(&mut v, &basis);
            let nv = v.norm();
            if best.as_ref().map_or(true, |b| nv > b.2) {
                best = Some((k, v, nv));
            }
        }
        match best {
            Some((k, v, nv)) if nv > 1e-8 => {
                used[k] = true;
                basis.push(v / nv);
            }
            _ => break,
        }
    }
    let cols: Vec<DVector<f64>> = basis.split_off(start);
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Null space with the default relative rank threshold.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    null_space_with_tol(m, rank_threshold(m, EPS))
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn lstsq(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if m.ncols() == 0 {
        return DVector::zeros(0);
    }
    if m.nrows() == 0 {
        return DVector::zeros(m.ncols());
    }
    let svd = m.clone().svd(true, true);
    let tol = rank_threshold(m, EPS);
    svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(m.ncols()))
}

/// Solve a square system, `None` when it is numerically singular relative to
/// `rel_tol` (smallest / largest singular value).
pub fn solve_square(m: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Option<DVector<f64>> {
    let inv = inverse(m, rel_tol)?;
    Some(inv * b)
}

/// Inverse of a square matrix, `None` when numerically singular.
pub fn inverse(m: &DMatrix<f64>, rel_tol: f64) -> Option<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return None;
    }
    if m.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let s = singular_values(m);
    if s[s.len() - 1] <= rel_tol * s[0] || s[0] == 0.0 {
        return None;
    }
    m.clone().lu().try_inverse()
}

/// Select the given columns of `m` in order.
pub fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, k| m[(i, cols[k])])
}

/// Select the given rows of `m` in order.
pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |k, j| m[(rows[k], j)])
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, &x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one_row() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let z = null_space(&m);
        assert_eq!(z.ncols(), 2);
        assert!(max_abs(&(&m * &z)) < 1e-14);
        let g = z.transpose() * &z;
        assert!(max_abs(&(g - DMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn null_space_of_empty_matrix_is_identity() {
        let m = DMatrix::<f64>::zeros(0, 3);
        let z = null_space(&m);
        assert_eq!(z.ncols(), 3);
        assert!(max_abs(&(z - DMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn null_space_is_deterministic() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, -2.0, 0.5, 3.0, 0.0, 1.0, 1.0, -1.0]);
        assert_eq!(null_space(&m), null_space(&m));
    }

    #[test]
    fn rank_detects_duplicate_rows() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0]);
        assert_eq!(rank(&m), 1);
    }

    #[test]
    fn inverse_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(inverse(&m, 1e-12).is_none());
    }
}
