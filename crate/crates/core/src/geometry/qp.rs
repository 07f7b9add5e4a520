//! Metric projection onto a polyhedron `{v : E v = e, B v <= b}`.
//!
//! The objective `(v - w)ᵀ H (v - w)` is whitened with the Cholesky factor of
//! `H`, equalities are eliminated with an orthonormal null-space basis, and a
//! least-distance presolve (NNLS on the dual) yields a feasible start or an
//! infeasibility certificate. A primal active-set pass then fixes the active
//! set and the multipliers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::{cone_membership, nnls, AMetric, ConeSpec, GeometryError};
use crate::linalg;

/// Polyhedron in coordinates carrying the metric `H` (symmetric positive
/// definite).
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    pub metric: DMatrix<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
}

impl Polyhedron {
    /// Only inequalities.
    pub fn from_inequalities(metric: DMatrix<f64>, b: DMatrix<f64>, rhs: DVector<f64>) -> Self {
        let d = metric.nrows();
        Self {
            metric,
            eq_matrix: DMatrix::zeros(0, d),
            eq_rhs: DVector::zeros(0),
            ineq_matrix: b,
            ineq_rhs: rhs,
        }
    }

    /// Axis-aligned box `lo <= v <= hi`.
    pub fn boxed(metric: DMatrix<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> Self {
        let d = lo.len();
        let mut b = DMatrix::zeros(2 * d, d);
        let mut rhs = DVector::zeros(2 * d);
        for i in 0..d {
            b[(2 * i, i)] = -1.0;
            rhs[2 * i] = -lo[i];
            b[(2 * i + 1, i)] = 1.0;
            rhs[2 * i + 1] = hi[i];
        }
        Self::from_inequalities(metric, b, rhs)
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// The translate `P + c`.
    pub fn translated(&self, c: &DVector<f64>) -> Self {
        Self {
            metric: self.metric.clone(),
            eq_matrix: self.eq_matrix.clone(),
            eq_rhs: &self.eq_rhs + &self.eq_matrix * c,
            ineq_matrix: self.ineq_matrix.clone(),
            ineq_rhs: &self.ineq_rhs + &self.ineq_matrix * c,
        }
    }

    /// Largest violation of any constraint at `v` (zero when feasible).
    pub fn violation(&self, v: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        if self.ineq_matrix.nrows() > 0 {
            let s = &self.ineq_matrix * v - &self.ineq_rhs;
            worst = worst.max(s.max());
        }
        if self.eq_matrix.nrows() > 0 {
            let s = &self.eq_matrix * v - &self.eq_rhs;
            worst = worst.max(s.amax());
        }
        worst
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        linalg::sqrt(v.dot(&(&self.metric * v)).max(0.0))
    }

    pub fn dist(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.norm(&(x - y))
    }
}

/// Tolerances for [`project_polyhedron`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpOptions {
    /// Relative feasibility tolerance.
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            max_iter: 500,
        }
    }
}

/// Result of [`project_polyhedron`].
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: DVector<f64>,
    /// Indices of inequalities in the final working set, ascending.
    pub active: Vec<usize>,
    /// Inequality multipliers for `½ ||v - w||²_H`, zero off the active set.
    pub multipliers: DVector<f64>,
    pub iterations: usize,
}

impl Projection {
    /// First-order optimality: `H (w - v)` lies in the cone spanned by the
    /// active outward normals and `± rows(E)`.
    pub fn kkt_holds(&self, poly: &Polyhedron, w: &DVector<f64>, tol: f64) -> bool {
        let d = poly.dim();
        let grad = &poly.metric * (w - &self.point);
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for &i in &self.active {
            cols.push(poly.ineq_matrix.row(i).transpose());
        }
        for i in 0..poly.eq_matrix.nrows() {
            let r = poly.eq_matrix.row(i).transpose();
            cols.push(r.clone());
            cols.push(-r);
        }
        let cone = ConeSpec::from_columns(d, &cols);
        let scale = grad.norm().max(linalg::max_abs(&poly.metric) * w.norm().max(1.0));
        cone_membership(&AMetric::identity(d), &grad, &cone, tol).residual <= tol * scale.max(1.0)
    }
}

struct Reduced {
    /// `v = l_inv_t (u_p + z_basis z)`.
    l_inv_t: DMatrix<f64>,
    u_p: DVector<f64>,
    z_basis: DMatrix<f64>,
    /// Normalised inequalities `c z <= h` and the row scales.
    c: DMatrix<f64>,
    h: DVector<f64>,
    scale: DVector<f64>,
}

fn reduce(poly: &Polyhedron, tol: f64) -> Result<Reduced, GeometryError> {
    let d = poly.dim();
    let chol = poly
        .metric
        .clone()
        .cholesky()
        .ok_or(GeometryError::NotPositiveDefinite)?;
    let l = chol.l();
    let l_inv = linalg::inverse(&l, 0.0).ok_or(GeometryError::NotPositiveDefinite)?;
    let l_inv_t = l_inv.transpose();

    let (u_p, z_basis) = if poly.eq_matrix.nrows() == 0 {
        (DVector::zeros(d), DMatrix::identity(d, d))
    } else {
        let ew = &poly.eq_matrix * &l_inv_t;
        let u_p = linalg::lstsq(&ew, &poly.eq_rhs);
        let res = (&ew * &u_p - &poly.eq_rhs).amax();
        if res > tol * poly.eq_rhs.amax().max(1.0) {
            return Err(GeometryError::InfeasibleSet { residual: res });
        }
        (u_p, linalg::null_space(&ew))
    };

    let k = poly.ineq_matrix.nrows();
    let raw = &poly.ineq_matrix * &l_inv_t * &z_basis;
    let raw_h = &poly.ineq_rhs - &poly.ineq_matrix * &l_inv_t * &u_p;
    let mut c = raw.clone();
    let mut h = raw_h.clone();
    let mut scale = DVector::zeros(k);
    for i in 0..k {
        let nr = raw.row(i).norm();
        if nr <= 1e-14 * linalg::max_abs(&poly.ineq_matrix).max(1.0) {
            // constraint is constant on the affine hull
            if raw_h[i] < -tol * raw_h.amax().max(1.0) {
                return Err(GeometryError::InfeasibleSet { residual: -raw_h[i] });
            }
            c.row_mut(i).fill(0.0);
            h[i] = raw_h[i].max(0.0);
            scale[i] = 0.0;
            continue;
        }
        c.row_mut(i).scale_mut(1.0 / nr);
        h[i] = raw_h[i] / nr;
        scale[i] = nr;
    }
    Ok(Reduced {
        l_inv_t,
        u_p,
        z_basis,
        c,
        h,
        scale,
    })
}

/// Least-distance point of `{s : C s <= h}` via NNLS on the dual.
fn least_distance(c: &DMatrix<f64>, h: &DVector<f64>, tol: f64) -> Result<DVector<f64>, GeometryError> {
    let (k, n) = c.shape();
    if k == 0 || h.iter().all(|&x| x >= 0.0) {
        return Ok(DVector::zeros(n));
    }
    // LDP in the form G s >= g with G = -C, g = -h
    let mut e = DMatrix::zeros(n + 1, k);
    for i in 0..k {
        for j in 0..n {
            e[(j, i)] = -c[(i, j)];
        }
        e[(n, i)] = -h[i];
    }
    let mut f = DVector::zeros(n + 1);
    f[n] = 1.0;
    let sol = nnls(&e, &f);
    let r = &e * &sol.x - &f;
    if r.norm() <= 1e-12 || r[n] >= -1e-14 {
        return Err(GeometryError::InfeasibleSet { residual: r.norm() });
    }
    let s = DVector::from_fn(n, |j, _| -r[j] / r[n]);
    let viol = (c * &s - h).max();
    if viol > tol {
        return Err(GeometryError::InfeasibleSet { residual: viol });
    }
    Ok(s)
}

/// Nearest point of `poly` to `w` in the metric `H`.
pub fn project_polyhedron(
    poly: &Polyhedron,
    w: &DVector<f64>,
    opts: &QpOptions,
) -> Result<Projection, GeometryError> {
    let d = poly.dim();
    if w.len() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            found: w.len(),
        });
    }
    if poly.eq_matrix.nrows() == 0
        && (poly.ineq_matrix.nrows() == 0 || (&poly.ineq_matrix * w - &poly.ineq_rhs).max() <= 0.0)
    {
        let k = poly.ineq_matrix.nrows();
        return Ok(Projection {
            point: w.clone(),
            active: Vec::new(),
            multipliers: DVector::zeros(k),
            iterations: 0,
        });
    }
    let rhs_scale = poly
        .ineq_rhs
        .amax()
        .max(poly.eq_rhs.amax())
        .max(w.amax())
        .max(1.0);
    let tol = opts.feas_tol * rhs_scale;
    let red = reduce(poly, tol)?;
    let k = red.c.nrows();

    // whitened target in the z coordinates
    let l_t = linalg::inverse(&red.l_inv_t, 0.0).ok_or(GeometryError::NotPositiveDefinite)?;
    let u0 = &l_t * w;
    let z0 = red.z_basis.transpose() * (&u0 - &red.u_p);

    let shifted_h = &red.h - &red.c * &z0;
    let mut z = &z0 + least_distance(&red.c, &shifted_h, tol)?;

    // working set: active rows, kept linearly independent
    let mut working: Vec<usize> = Vec::new();
    let slack = |z: &DVector<f64>, i: usize| red.h[i] - red.c.row(i).dot(&z.transpose());
    for i in 0..k {
        if red.scale[i] == 0.0 || slack(&z, i) > tol {
            continue;
        }
        let mut trial = working.clone();
        trial.push(i);
        if linalg::rank(&linalg::select_rows(&red.c, &trial)) == trial.len() {
            working = trial;
        }
    }

    let n = z.len();
    let mut iterations = 0;
    let lambda = loop {
        iterations += 1;
        if iterations > opts.max_iter {
            return Err(GeometryError::MaxIterations {
                limit: opts.max_iter,
            });
        }
        let cw = linalg::select_rows(&red.c, &working);
        let target = &z0 - &z;
        let p = if working.is_empty() {
            target.clone()
        } else {
            let zb = linalg::null_space(&cw);
            if zb.ncols() == 0 {
                DVector::zeros(n)
            } else {
                &zb * (zb.transpose() * &target)
            }
        };
        let pscale = z.norm().max(z0.norm()).max(1.0);
        if p.norm() <= 1e-12 * pscale {
            let lam = if working.is_empty() {
                DVector::zeros(0)
            } else {
                linalg::lstsq(&cw.transpose(), &target)
            };
            let neg = lam
                .iter()
                .enumerate()
                .filter(|(_, &l)| l < -1e-12 * pscale)
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(core::cmp::Ordering::Equal));
            match neg {
                Some((pos, _)) => {
                    working.remove(pos);
                    continue;
                }
                None => break lam,
            }
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..k {
            if working.contains(&i) || red.scale[i] == 0.0 {
                continue;
            }
            let cp = red.c.row(i).dot(&p.transpose());
            if cp > 1e-14 * p.norm() {
                let step = (slack(&z, i) / cp).max(0.0);
                if step < alpha {
                    alpha = step;
                    blocking = Some(i);
                }
            }
        }
        z += &p * alpha;
        if let Some(i) = blocking {
            working.push(i);
        }
    };

    let mut order: Vec<usize> = (0..working.len()).collect();
    order.sort_by_key(|&k| working[k]);
    let mut multipliers = DVector::zeros(k);
    for &pos in &order {
        let i = working[pos];
        multipliers[i] = lambda[pos].max(0.0) / red.scale[i];
    }
    let mut active: Vec<usize> = working.clone();
    active.sort_unstable();

    let point = &red.l_inv_t * (&red.u_p + &red.z_basis * &z);
    Ok(Projection {
        point,
        active,
        multipliers,
        iterations,
    })
}

/// `proj(v, F) + c == proj(v + c, F + c)` within `tol` in the metric of `F`.
pub fn translation_property_check(
    poly: &Polyhedron,
    v: &DVector<f64>,
    c: &DVector<f64>,
    tol: f64,
) -> bool {
    let opts = QpOptions::default();
    let (Ok(p), Ok(q)) = (
        project_polyhedron(poly, v, &opts),
        project_polyhedron(&poly.translated(c), &(v + c), &opts),
    ) else {
        return false;
    };
    let scale = poly.norm(v).max(poly.norm(c)).max(1.0);
    poly.dist(&(p.point + c), &q.point) <= tol * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn feasible_point_is_fixed() {
        let poly = Polyhedron::boxed(DMatrix::identity(3, 3), &v(&[-1.0; 3]), &v(&[1.0; 3]));
        let w = v(&[0.2, -0.5, 0.9]);
        let p = project_polyhedron(&poly, &w, &QpOptions::default()).unwrap();
        assert!((p.point - w).amax() < 1e-14);
        assert!(p.active.is_empty());
    }

    #[test]
    fn box_projection_clamps() {
        let poly = Polyhedron::boxed(DMatrix::identity(3, 3), &v(&[-1.0; 3]), &v(&[1.0; 3]));
        let w = v(&[2.0, 0.0, 0.0]);
        let p = project_polyhedron(&poly, &w, &QpOptions::default()).unwrap();
        assert!((&p.point - v(&[1.0, 0.0, 0.0])).amax() < 1e-13);
        assert_eq!(p.active, vec![1]);
        assert!((p.multipliers[1] - 1.0).abs() < 1e-12);
        assert!(p.kkt_holds(&poly, &w, 1e-9));
    }

    #[test]
    fn weighted_metric_changes_the_answer() {
        // half-plane x + y <= 0, weights (1, 4)
        let h = DMatrix::from_diagonal(&v(&[1.0, 4.0]));
        let poly = Polyhedron::from_inequalities(h, DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[0.0]));
        let w = v(&[1.0, 1.0]);
        let p = project_polyhedron(&poly, &w, &QpOptions::default()).unwrap();
        // minimise (x-1)^2 + 4(y-1)^2 on x + y = 0: x = -0.6... solve: 2(x-1) = 8(y-1), x = -y
        let y = 0.6;
        assert!((p.point - v(&[-y, y])).amax() < 1e-12);
    }

    #[test]
    fn equalities_are_respected() {
        let poly = Polyhedron {
            metric: DMatrix::identity(3, 3),
            eq_matrix: DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            eq_rhs: v(&[1.0]),
            ineq_matrix: DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0]),
            ineq_rhs: v(&[0.0, 0.0, 0.0]),
        };
        let w = v(&[2.0, 0.0, -1.0]);
        let p = project_polyhedron(&poly, &w, &QpOptions::default()).unwrap();
        assert!((&p.point - v(&[1.0, 0.0, 0.0])).amax() < 1e-12);
        assert!(p.kkt_holds(&poly, &w, 1e-9));
    }

    #[test]
    fn infeasible_detected() {
        let poly = Polyhedron::boxed(DMatrix::identity(1, 1), &v(&[1.0]), &v(&[0.0]));
        assert!(matches!(
            project_polyhedron(&poly, &v(&[0.0]), &QpOptions::default()),
            Err(GeometryError::InfeasibleSet { .. })
        ));
        let poly = Polyhedron {
            metric: DMatrix::identity(2, 2),
            eq_matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
            eq_rhs: v(&[0.0, 1.0]),
            ineq_matrix: DMatrix::zeros(0, 2),
            ineq_rhs: DVector::zeros(0),
        };
        assert!(matches!(
            project_polyhedron(&poly, &v(&[0.0, 0.0]), &QpOptions::default()),
            Err(GeometryError::InfeasibleSet { .. })
        ));
    }

    #[test]
    fn degenerate_box_of_zero_width() {
        let poly = Polyhedron::boxed(DMatrix::identity(2, 2), &v(&[0.5, -1.0]), &v(&[0.5, 1.0]));
        let p = project_polyhedron(&poly, &v(&[3.0, 4.0]), &QpOptions::default()).unwrap();
        assert!((p.point - v(&[0.5, 1.0])).amax() < 1e-12);
    }

    #[test]
    fn translation_identity_on_box() {
        let poly = Polyhedron::boxed(DMatrix::from_diagonal(&v(&[1.0, 3.0])), &v(&[-1.0, 0.0]), &v(&[1.0, 2.0]));
        assert!(translation_property_check(&poly, &v(&[5.0, -3.0]), &v(&[0.0, 0.0]), 1e-9));
        assert!(translation_property_check(&poly, &v(&[5.0, -3.0]), &v(&[0.7, -2.0]), 1e-9));
    }
}
