//! Brute-force oracles for projections and cone membership.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sweepcert_core::geometry::Polyhedron;
use sweepcert_core::linalg;

pub fn random_vec<R: Rng>(rng: &mut R, n: usize, r: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-r..r))
}

pub fn random_spd<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(d, d) * 0.3
}

/// Nonempty polyhedron: random inequalities around a random interior point.
pub fn random_polyhedron<R: Rng>(rng: &mut R, d: usize, k: usize) -> Polyhedron {
    let center = random_vec(rng, d, 1.0);
    let b = DMatrix::from_fn(k, d, |_, _| rng.gen_range(-1.0..1.0));
    let rhs = &b * &center + DVector::from_fn(k, |_, _| rng.gen_range(0.05..1.5));
    Polyhedron::from_inequalities(random_spd(rng, d), b, rhs)
}

/// Exhaustive active-set oracle: minimum over all constraint subsets of the
/// equality-constrained projection, kept when feasible.
pub fn brute_force_projection(poly: &Polyhedron, w: &DVector<f64>) -> DVector<f64> {
    let d = poly.dim();
    let k = poly.ineq_matrix.nrows();
    let h = &poly.metric;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let rows: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s = rows.len();
        if s > d {
            continue;
        }
        let mut kkt = DMatrix::zeros(d + s, d + s);
        kkt.view_mut((0, 0), (d, d)).copy_from(h);
        let mut rhs = DVector::zeros(d + s);
        rhs.rows_mut(0, d).copy_from(&(h * w));
        for (r, &i) in rows.iter().enumerate() {
            for c in 0..d {
                kkt[(d + r, c)] = poly.ineq_matrix[(i, c)];
                kkt[(c, d + r)] = poly.ineq_matrix[(i, c)];
            }
            rhs[d + r] = poly.ineq_rhs[i];
        }
        let Some(sol) = linalg::solve_square(&kkt, &rhs, 1e-12) else {
            continue;
        };
        let v = sol.rows(0, d).into_owned();
        if poly.violation(&v) > 1e-9 {
            continue;
        }
        let dist = poly.dist(&v, w);
        if best.as_ref().map_or(true, |b| dist < b.0) {
            best = Some((dist, v));
        }
    }
    best.expect("nonempty polyhedron").1
}

/// LP-feasibility oracle for `∃ λ >= 0 : G λ = x` by Carathéodory: some
/// linearly independent subset represents `x` with nonnegative weights.
pub fn lp_feasible(g: &DMatrix<f64>, x: &DVector<f64>) -> bool {
    if x.amax() < 1e-12 {
        return true;
    }
    let k = g.ncols();
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let sub = linalg::select_columns(g, &cols);
        if linalg::rank(&sub) < cols.len() {
            continue;
        }
        let lam = linalg::lstsq(&sub, x);
        let res = (&sub * &lam - x).norm();
        if res < 1e-9 * x.norm().max(1.0) && lam.iter().all(|&l| l >= -1e-12) {
            return true;
        }
    }
    false
}
