//! Elastoplastic network input and its validation.
//!
//! A network of `m` springs on `n` nodes is described by the kinematic
//! (incidence) matrix `D` (m×n), the stiffnesses `a` (the diagonal of `A`),
//! the elastic stress limits `c_minus ≤ c_plus`, the loading location vector
//! `R` and an affine displacement-controlled loading `l(t) = l0 + l1·t`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{self, EPS};

/// Affine displacement-controlled loading `l(t) = l0 + l1·t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Loading {
    /// Initial length offset.
    pub l0: f64,
    /// Loading rate.
    pub l1: f64,
}

impl Loading {
    pub fn new(l0: f64, l1: f64) -> Self {
        Self { l0, l1 }
    }

    /// `l(t)`.
    pub fn at(&self, t: f64) -> f64 {
        self.l0 + self.l1 * t
    }
}

/// User-facing network description.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    /// Number of springs.
    pub m: usize,
    /// Number of nodes.
    pub n: usize,
    /// Kinematic matrix `D`, m×n.
    pub kinematic: DMatrix<f64>,
    /// Stiffnesses, the diagonal of `A`. All positive.
    pub stiffness: Vec<f64>,
    /// Lower elastic stress limits.
    pub c_minus: Vec<f64>,
    /// Upper elastic stress limits.
    pub c_plus: Vec<f64>,
    /// Loading location vector `R`.
    pub load_location: Vec<f64>,
    pub loading: Loading,
    /// Optional period `T` used only for reporting.
    pub period: Option<f64>,
}

/// Validation failures.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum NetworkError {
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {field}")]
    NonFinite { field: &'static str },
    #[error("need at least two nodes, found {n}")]
    TooFewNodes { n: usize },
    #[error("need m >= n, found m = {m}, n = {n}")]
    TooFewSprings { m: usize, n: usize },
    #[error("stiffness of spring {} is {value}, must be positive", spring + 1)]
    NonpositiveStiffness { spring: usize, value: f64 },
    #[error("limits of spring {} are out of order: c_minus = {lower} > c_plus = {upper}", spring + 1)]
    LimitOrderViolated {
        spring: usize,
        lower: f64,
        upper: f64,
    },
    #[error("rank-deficient D: rank D = {found}, expected n - 1 = {expected} (springs do not form a connected graph; isolated node columns: {isolated_nodes:?})")]
    RankDeficientD {
        expected: usize,
        found: usize,
        isolated_nodes: Vec<usize>,
    },
    #[error("loading degenerate: rank(D^T R) = {found}, expected 1 (|D^T R| = {norm:e}, threshold {threshold:e})")]
    LoadingDegenerate {
        found: usize,
        norm: f64,
        threshold: f64,
    },
    #[error("period must be positive, found {value}")]
    InvalidPeriod { value: f64 },
}

/// Rank decision settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    /// Relative singular-value threshold; the absolute threshold is
    /// `max(rows, cols) * ||matrix||_2 * rank_rel_tol`.
    pub rank_rel_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { rank_rel_tol: EPS }
    }
}

/// A network that passed [`validate_network`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedNetwork {
    spec: NetworkSpec,
    rank_d: usize,
    rank_dtr: usize,
    rank_tol_d: f64,
    rank_tol_dtr: f64,
    options: ValidationOptions,
}

impl ValidatedNetwork {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn into_spec(self) -> NetworkSpec {
        self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn rank_d(&self) -> usize {
        self.rank_d
    }

    pub fn rank_dtr(&self) -> usize {
        self.rank_dtr
    }

    /// Singular-value thresholds used for `rank D` and `rank(D^T R)`.
    pub fn rank_thresholds(&self) -> (f64, f64) {
        (self.rank_tol_d, self.rank_tol_dtr)
    }

    pub fn options(&self) -> ValidationOptions {
        self.options
    }

    pub fn kinematic(&self) -> &DMatrix<f64> {
        &self.spec.kinematic
    }

    pub fn stiffness(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.spec.stiffness)
    }

    pub fn load_location(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.spec.load_location)
    }

    pub fn c_minus(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.spec.c_minus)
    }

    pub fn c_plus(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.spec.c_plus)
    }

    pub fn loading(&self) -> Loading {
        self.spec.loading
    }
}

fn check_len(field: &'static str, v: &[f64], m: usize) -> Result<(), NetworkError> {
    if v.len() != m {
        return Err(NetworkError::DimensionMismatch {
            field,
            expected: m,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(NetworkError::NonFinite { field });
    }
    Ok(())
}

/// Validate with default options.
pub fn validate_network(spec: NetworkSpec) -> Result<ValidatedNetwork, NetworkError> {
    validate_network_with(spec, ValidationOptions::default())
}

/// Check dimensions, stiffness signs, limit order and the two rank
/// conditions `rank D = n - 1`, `rank(D^T R) = 1`.
///
/// `c_minus[j] == c_plus[j]` is accepted here; facet enumeration reports it.
pub fn validate_network_with(
    spec: NetworkSpec,
    options: ValidationOptions,
) -> Result<ValidatedNetwork, NetworkError> {
    let (m, n) = (spec.m, spec.n);
    if spec.kinematic.nrows() != m {
        return Err(NetworkError::DimensionMismatch {
            field: "D rows",
            expected: m,
            found: spec.kinematic.nrows(),
        });
    }
    if spec.kinematic.ncols() != n {
        return Err(NetworkError::DimensionMismatch {
            field: "D columns",
            expected: n,
            found: spec.kinematic.ncols(),
        });
    }
    if spec.kinematic.iter().any(|x| !x.is_finite()) {
        return Err(NetworkError::NonFinite { field: "D" });
    }
    check_len("a", &spec.stiffness, m)?;
    check_len("c_minus", &spec.c_minus, m)?;
    check_len("c_plus", &spec.c_plus, m)?;
    check_len("R", &spec.load_location, m)?;
    if !spec.loading.l0.is_finite() || !spec.loading.l1.is_finite() {
        return Err(NetworkError::NonFinite { field: "loading" });
    }
    if let Some(t) = spec.period {
        if !(t > 0.0) || !t.is_finite() {
            return Err(NetworkError::InvalidPeriod { value: t });
        }
    }
    if n < 2 {
        return Err(NetworkError::TooFewNodes { n });
    }
    if m < n {
        return Err(NetworkError::TooFewSprings { m, n });
    }
    if let Some((j, &value)) = spec.stiffness.iter().enumerate().find(|(_, &a)| !(a > 0.0)) {
        return Err(NetworkError::NonpositiveStiffness { spring: j, value });
    }
    for j in 0..m {
        if spec.c_minus[j] > spec.c_plus[j] {
            return Err(NetworkError::LimitOrderViolated {
                spring: j,
                lower: spec.c_minus[j],
                upper: spec.c_plus[j],
            });
        }
    }

    let d = &spec.kinematic;
    let rank_tol_d = linalg::rank_threshold(d, options.rank_rel_tol);
    let rank_d = linalg::rank_with_tol(d, rank_tol_d);
    if rank_d != n - 1 {
        let isolated_nodes = (0..n)
            .filter(|&k| d.column(k).iter().all(|&x| x == 0.0))
            .collect();
        return Err(NetworkError::RankDeficientD {
            expected: n - 1,
            found: rank_d,
            isolated_nodes,
        });
    }

    let r = DVector::from_column_slice(&spec.load_location);
    let dtr = d.transpose() * &r;
    let norm = dtr.norm();
    let rank_tol_dtr = (m.max(n) as f64) * linalg::spectral_norm(d) * r.norm() * options.rank_rel_tol;
    let rank_dtr = usize::from(norm > rank_tol_dtr);
    if rank_dtr != 1 {
        return Err(NetworkError::LoadingDegenerate {
            found: rank_dtr,
            norm,
            threshold: rank_tol_dtr,
        });
    }

    Ok(ValidatedNetwork {
        spec,
        rank_d,
        rank_dtr,
        rank_tol_d,
        rank_tol_dtr,
        options,
    })
}

/// The five-spring, four-node network used throughout the examples and
/// tests, with the given stiffnesses, limits and loading.
pub fn five_spring_network(
    stiffness: [f64; 5],
    c_minus: [f64; 5],
    c_plus: [f64; 5],
    loading: Loading,
) -> NetworkSpec {
    #[rustfmt::skip]
    let d = DMatrix::from_row_slice(5, 4, &[
        -1.0,  1.0,  0.0, 0.0,
        -1.0,  0.0,  1.0, 0.0,
         0.0, -1.0,  1.0, 0.0,
         0.0, -1.0,  0.0, 1.0,
         0.0,  0.0, -1.0, 1.0,
    ]);
    NetworkSpec {
        m: 5,
        n: 4,
        kinematic: d,
        stiffness: stiffness.to_vec(),
        c_minus: c_minus.to_vec(),
        c_plus: c_plus.to_vec(),
        load_location: alloc::vec![1.0, 0.0, 1.0, 0.0, 1.0],
        loading,
        period: None,
    }
}
