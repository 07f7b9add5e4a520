//! Lawson–Hanson nonnegative least squares.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, EPS};

/// Result of [`nnls`].
#[derive(Clone, Debug, PartialEq)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    /// `||E x - f||_2`.
    pub residual: f64,
    pub iterations: usize,
}

/// Minimise `||E x - f||_2` subject to `x >= 0`.
///
/// Active-set iteration; among the candidate columns with a positive dual
/// gradient the lowest index enters first, so the path is deterministic.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> NnlsSolution {
    let (rows, cols) = e.shape();
    let mut x = DVector::zeros(cols);
    if cols == 0 {
        return NnlsSolution {
            residual: f.norm(),
            x,
            iterations: 0,
        };
    }
    let scale = linalg::max_abs(e) * f.amax().max(1e-300);
    let tol_w = 10.0 * EPS * scale * (rows.max(cols) as f64);
    let mut passive = alloc::vec![false; cols];
    let mut blocked = alloc::vec![false; cols];
    let max_outer = 3 * cols + 10;
    let mut iterations = 0;

    for _ in 0..max_outer {
        let r = f - e * &x;
        let w = e.transpose() * &r;
        let Some(j) = (0..cols).find(|&j| !passive[j] && !blocked[j] && w[j] > tol_w) else {
            break;
        };
        passive[j] = true;
        iterations += 1;

        let mut skipped = false;
        let mut inner = 0;
        loop {
            inner += 1;
            let idx: Vec<usize> = (0..cols).filter(|&k| passive[k]).collect();
            let sub = linalg::select_columns(e, &idx);
            let zs = linalg::lstsq(&sub, f);
            let mut z = DVector::zeros(cols);
            for (k, &c) in idx.iter().enumerate() {
                z[c] = zs[k];
            }
            if idx.iter().all(|&c| z[c] > 0.0) {
                x = z;
                break;
            }
            if inner == 1 && z[j] <= 0.0 {
                // entering column cannot improve numerically; skip it
                passive[j] = false;
                skipped = true;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &c in &idx {
                if z[c] <= 0.0 {
                    let denom = x[c] - z[c];
                    if denom > 0.0 {
                        alpha = alpha.min(x[c] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x = &x + (&z - &x) * alpha;
            for &c in &idx {
                if x[c] <= 10.0 * EPS * x.amax().max(1.0) {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            if inner > 3 * cols + 10 {
                break;
            }
        }
        if skipped {
            blocked[j] = true;
        } else {
            // progress was made, previously skipped columns may enter again
            blocked.iter_mut().for_each(|b| *b = false);
        }
    }

    let residual = (e * &x - f).norm();
    NnlsSolution {
        x,
        residual,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_nonnegative_combination() {
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let f = DVector::from_vec(alloc::vec![1.0, 2.0]);
        let s = nnls(&e, &f);
        assert!((s.x[0] - 1.0).abs() < 1e-14 && (s.x[1] - 2.0).abs() < 1e-14);
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn clamps_negative_direction() {
        let e = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let f = DVector::from_vec(alloc::vec![-1.0, 0.0]);
        let s = nnls(&e, &f);
        assert_eq!(s.x[0], 0.0);
        assert!((s.residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn classic_small_instance() {
        // min ||E x - f|| with x >= 0, unconstrained optimum has a negative entry
        let e = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let f = DVector::from_vec(alloc::vec![3.0, 2.0, 1.0]);
        let s = nnls(&e, &f);
        // unconstrained: slope negative, so x2 = 0 and x1 = mean(f) = 2
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert_eq!(s.x[1], 0.0);
    }
}
