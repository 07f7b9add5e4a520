//! A-metric geometry: weighted inner products, projections onto spans and
//! polyhedra, cone membership and distance to the boundary of a cone.
//!
//! Every inner product here is `(x, y)_A = <x, A y>` with `A = diag(a)`,
//! `a > 0`. Cones are finitely generated; their generators are stored as the
//! columns of a matrix.

mod nnls;
mod qp;

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::facets::SignedIndex;
use crate::linalg::{self, sqrt};

pub use nnls::{nnls, NnlsSolution};
pub use qp::{
    project_polyhedron, translation_property_check, Polyhedron, Projection, QpOptions,
};

/// Errors raised by the geometric kernel.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum GeometryError {
    #[error("generators are linearly dependent in the metric (Gram rank {rank} < {count})")]
    DependentGenerators { rank: usize, count: usize },
    #[error("vector is not in the span of the generators (residual {residual:e})")]
    NotInSpan { residual: f64 },
    #[error("vector is not strictly inside the cone (smallest conic coordinate {min_coeff:e})")]
    NotStrictlyInside { min_coeff: f64 },
    #[error("cone has no generators, its boundary distance is undefined")]
    EmptyCone,
    #[error("feasible set is empty (certificate residual {residual:e})")]
    InfeasibleSet { residual: f64 },
    #[error("active-set iteration limit {limit} reached")]
    MaxIterations { limit: usize },
    #[error("metric matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Diagonal positive weights defining `(x, y)_A = Σ a_k x_k y_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AMetric {
    weights: DVector<f64>,
}

impl AMetric {
    /// Panics if a weight is not strictly positive.
    pub fn new(weights: DVector<f64>) -> Self {
        assert!(
            weights.iter().all(|&w| w > 0.0 && w.is_finite()),
            "metric weights must be positive"
        );
        Self { weights }
    }

    pub fn from_slice(weights: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(weights))
    }

    /// Euclidean metric on `R^len`.
    pub fn identity(len: usize) -> Self {
        Self {
            weights: DVector::from_element(len, 1.0),
        }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.iter()
            .zip(y.iter())
            .zip(self.weights.iter())
            .map(|((a, b), w)| w * a * b)
            .sum()
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        sqrt(self.inner(x, x))
    }

    pub fn dist(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.norm(&(x - y))
    }

    /// `A x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.weights)
    }

    /// `A^{-1} x`.
    pub fn apply_inverse(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_div(&self.weights)
    }

    /// `A M` for a matrix with `dim()` rows.
    pub fn apply_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= self.weights[i];
        }
        out
    }

    /// Gram matrix `G^T A G`.
    pub fn gram(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        g.transpose() * self.apply_rows(g)
    }

    /// `sqrt(A) M`, used to move A-metric problems to Euclidean ones.
    fn sqrt_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= sqrt(self.weights[i]);
        }
        out
    }

    fn sqrt_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| sqrt(self.weights[i]) * x[i])
    }
}

/// A finitely generated cone `cone{g_1, ..., g_k}` with optional
/// provenance labels `(alpha, j)` for each generator.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeSpec {
    /// Generators as columns.
    pub generators: DMatrix<f64>,
    /// One label per generator, or empty.
    pub labels: Vec<SignedIndex>,
}

impl ConeSpec {
    pub fn new(generators: DMatrix<f64>) -> Self {
        Self {
            generators,
            labels: Vec::new(),
        }
    }

    pub fn labelled(generators: DMatrix<f64>, labels: Vec<SignedIndex>) -> Self {
        debug_assert_eq!(generators.ncols(), labels.len());
        Self { generators, labels }
    }

    pub fn from_columns(dim: usize, cols: &[DVector<f64>]) -> Self {
        if cols.is_empty() {
            return Self::new(DMatrix::zeros(dim, 0));
        }
        Self::new(DMatrix::from_columns(cols))
    }

    pub fn len(&self) -> usize {
        self.generators.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Generators are linearly independent (numerical rank of the Gram
    /// matrix in the given metric equals their count).
    pub fn is_independent(&self, metric: &AMetric) -> bool {
        gram_rank(metric, &self.generators) == self.len()
    }

    /// The cone without generator `k`.
    pub fn without(&self, k: usize) -> ConeSpec {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| i != k).collect();
        let labels = if self.labels.is_empty() {
            Vec::new()
        } else {
            keep.iter().map(|&i| self.labels[i]).collect()
        };
        ConeSpec {
            generators: linalg::select_columns(&self.generators, &keep),
            labels,
        }
    }
}

fn gram_rank(metric: &AMetric, g: &DMatrix<f64>) -> usize {
    if g.ncols() == 0 {
        return 0;
    }
    let s = metric.sqrt_rows(g);
    let tol = linalg::rank_threshold(&s, 1e3 * linalg::EPS);
    linalg::rank_with_tol(&s, tol)
}

/// Coefficients `λ` of the A-orthogonal projection of `x` onto the span of
/// the columns of `g`: `(GᵀAG) λ = GᵀA x`.
pub fn span_coefficients(
    metric: &AMetric,
    x: &DVector<f64>,
    g: &DMatrix<f64>,
) -> Result<DVector<f64>, GeometryError> {
    let k = g.ncols();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    let rank = gram_rank(metric, g);
    if rank < k {
        return Err(GeometryError::DependentGenerators { rank, count: k });
    }
    let gram = metric.gram(g);
    let rhs = g.transpose() * metric.apply(x);
    match gram.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => Err(GeometryError::DependentGenerators { rank, count: k }),
    }
}

/// A-orthogonal projection of `x` onto `span(g)`,
/// `p = G (GᵀAG)^{-1} GᵀA x`. The empty span projects to `0`.
pub fn project_span(
    metric: &AMetric,
    x: &DVector<f64>,
    g: &DMatrix<f64>,
) -> Result<DVector<f64>, GeometryError> {
    if g.ncols() == 0 {
        return Ok(DVector::zeros(x.len()));
    }
    let lambda = span_coefficients(metric, x, g)?;
    Ok(g * lambda)
}

/// Outcome of [`cone_membership`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConeMembership {
    pub inside: bool,
    /// Nonnegative coefficients of the nearest cone point.
    pub coeffs: DVector<f64>,
    /// `min_{λ>=0} ||G λ - x||_A`.
    pub residual: f64,
}

/// Decide `x ∈ cone(G)` by nonnegative least squares in the A-metric.
/// `inside` when the residual is at most `tol * max(1, ||x||_A)`.
pub fn cone_membership(metric: &AMetric, x: &DVector<f64>, cone: &ConeSpec, tol: f64) -> ConeMembership {
    let xn = metric.norm(x);
    if cone.is_empty() {
        return ConeMembership {
            inside: xn <= tol * xn.max(1.0),
            coeffs: DVector::zeros(0),
            residual: xn,
        };
    }
    let e = metric.sqrt_rows(&cone.generators);
    let f = metric.sqrt_vec(x);
    let sol = nnls(&e, &f);
    ConeMembership {
        inside: sol.residual <= tol * xn.max(1.0),
        coeffs: sol.x,
        residual: sol.residual,
    }
}

/// Outcome of [`cone_decompose_strict`].
#[derive(Clone, Debug, PartialEq)]
pub struct StrictDecomposition {
    /// All conic coordinates exceed `1e-9 * max|coeff|`.
    pub strict: bool,
    pub coeffs: DVector<f64>,
}

/// Relative strict-positivity threshold for conic coordinates.
pub const STRICT_REL_TOL: f64 = 1e-9;

/// Unique coordinates of `x` over independent generators; `strict` iff every
/// coordinate is positive beyond `STRICT_REL_TOL * max|coeff|`, i.e. `x` is
/// in the relative interior of the cone.
pub fn cone_decompose_strict(
    metric: &AMetric,
    x: &DVector<f64>,
    cone: &ConeSpec,
    tol: f64,
) -> Result<StrictDecomposition, GeometryError> {
    let coeffs = span_coefficients(metric, x, &cone.generators)?;
    let fit = &cone.generators * &coeffs;
    let residual = metric.dist(x, &fit);
    if residual > tol * metric.norm(x).max(1.0) {
        return Err(GeometryError::NotInSpan { residual });
    }
    let cmax = coeffs.amax();
    let strict = !coeffs.is_empty() && coeffs.iter().all(|&c| c > STRICT_REL_TOL * cmax);
    Ok(StrictDecomposition { strict, coeffs })
}

/// Distances from `x` to the span of each facet `cone{g_i : i != k}`,
/// indexed by the dropped generator `k`.
pub fn facet_distances(
    metric: &AMetric,
    x: &DVector<f64>,
    cone: &ConeSpec,
) -> Result<Vec<f64>, GeometryError> {
    (0..cone.len())
        .map(|k| {
            let rest = cone.without(k);
            let p = project_span(metric, x, &rest.generators)?;
            Ok(metric.dist(x, &p))
        })
        .collect()
}

/// A-distance from `x` to the relative boundary of the cone,
/// `min_k ||x - proj(x, span{g_i : i != k})||_A`.
///
/// Requires `x` strictly inside; a boundary point has zero margin and is
/// reported as [`GeometryError::NotStrictlyInside`].
pub fn distance_to_cone_boundary(
    metric: &AMetric,
    x: &DVector<f64>,
    cone: &ConeSpec,
) -> Result<f64, GeometryError> {
    if cone.is_empty() {
        return Err(GeometryError::EmptyCone);
    }
    let dec = cone_decompose_strict(metric, x, cone, 1e-9)?;
    if !dec.strict {
        return Err(GeometryError::NotStrictlyInside {
            min_coeff: dec.coeffs.min(),
        });
    }
    Ok(facet_distances(metric, x, cone)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn inner_product_uses_weights() {
        let m = AMetric::from_slice(&[2.0, 3.0]);
        assert_eq!(m.inner(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])), 2.0);
        assert_eq!(m.inner(&v(&[1.0, 1.0]), &v(&[2.0, 1.0])), 7.0);
        let e = AMetric::identity(3);
        assert_eq!(e.inner(&v(&[1.0, 2.0, 3.0]), &v(&[4.0, 5.0, 6.0])), 32.0);
    }

    #[test]
    fn project_span_edge_cases() {
        let m = AMetric::from_slice(&[1.0, 2.0, 3.0]);
        let g = DMatrix::from_columns(&[v(&[1.0, 0.0, 1.0]), v(&[0.0, 1.0, 1.0])]);
        let x = &g * v(&[0.3, -2.0]);
        let p = project_span(&m, &x, &g).unwrap();
        assert!((p - &x).amax() < 1e-13);
        let p0 = project_span(&m, &x, &DMatrix::zeros(3, 0)).unwrap();
        assert_eq!(p0, DVector::zeros(3));
    }

    #[test]
    fn dependent_generators_rejected() {
        let m = AMetric::identity(2);
        let g = DMatrix::from_columns(&[v(&[1.0, 1.0]), v(&[2.0, 2.0])]);
        assert!(matches!(
            project_span(&m, &v(&[1.0, 0.0]), &g),
            Err(GeometryError::DependentGenerators { rank: 1, count: 2 })
        ));
    }

    #[test]
    fn membership_basic() {
        let m = AMetric::identity(3);
        let g1 = v(&[1.0, 0.0, 1.0]);
        let g2 = v(&[0.0, 1.0, 0.0]);
        let cone = ConeSpec::from_columns(3, &[g1.clone(), g2.clone()]);
        let x = &g1 * 1.0 + &g2 * 2.0;
        let r = cone_membership(&m, &x, &cone, 1e-9);
        assert!(r.inside);
        assert!((r.coeffs[0] - 1.0).abs() < 1e-12 && (r.coeffs[1] - 2.0).abs() < 1e-12);
        assert!(r.residual < 1e-12);

        let lone = ConeSpec::from_columns(3, &[g1.clone()]);
        assert!(!cone_membership(&m, &(-&g1), &lone, 1e-9).inside);
    }

    #[test]
    fn empty_cone_contains_only_zero() {
        let m = AMetric::identity(2);
        let cone = ConeSpec::new(DMatrix::zeros(2, 0));
        assert!(cone_membership(&m, &v(&[0.0, 0.0]), &cone, 1e-9).inside);
        assert!(!cone_membership(&m, &v(&[0.0, 1.0]), &cone, 1e-9).inside);
        assert_eq!(
            distance_to_cone_boundary(&m, &v(&[0.0, 0.0]), &cone),
            Err(GeometryError::EmptyCone)
        );
    }

    #[test]
    fn strict_decomposition() {
        let m = AMetric::from_slice(&[1.0, 4.0]);
        let g1 = v(&[1.0, 0.0]);
        let g2 = v(&[1.0, 1.0]);
        let cone = ConeSpec::from_columns(2, &[g1.clone(), g2.clone()]);
        let d = cone_decompose_strict(&m, &(&g1 + &g2), &cone, 1e-9).unwrap();
        assert!(d.strict);
        assert!((d.coeffs[0] - 1.0).abs() < 1e-12 && (d.coeffs[1] - 1.0).abs() < 1e-12);
        let d = cone_decompose_strict(&m, &g1, &cone, 1e-9).unwrap();
        assert!(!d.strict);
        assert!(matches!(
            distance_to_cone_boundary(&m, &g1, &cone),
            Err(GeometryError::NotStrictlyInside { .. })
        ));
    }

    #[test]
    fn not_in_span() {
        let m = AMetric::identity(3);
        let cone = ConeSpec::from_columns(3, &[v(&[1.0, 0.0, 0.0])]);
        assert!(matches!(
            cone_decompose_strict(&m, &v(&[0.0, 1.0, 0.0]), &cone, 1e-9),
            Err(GeometryError::NotInSpan { .. })
        ));
    }

    #[test]
    fn boundary_distance_of_quadrant() {
        let m = AMetric::identity(2);
        let cone = ConeSpec::from_columns(2, &[v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
        let d = distance_to_cone_boundary(&m, &v(&[3.0, 1.0]), &cone).unwrap();
        assert!((d - 1.0).abs() < 1e-14);
        let dists = facet_distances(&m, &v(&[3.0, 1.0]), &cone).unwrap();
        assert_eq!(dists.len(), 2);
        assert!((dists[0] - 3.0).abs() < 1e-14);
        let _ = vec![0];
    }
}
