//! From a validated network to the polyhedral sweeping process
//! `-y' ∈ N^A_{C(t)}(y)` with `C(t) = C + c(t)`.
//!
//! The state space is `V = {y : (DM)ᵀ A y = 0}` of dimension `d = m - n + 2`,
//! spanned by the columns of `v_basis`. With the frame `G = [Rᵀ; D⊥ᵀ]` and
//! `W = G V_basis`, the offset is `c(t) = -V_basis W^{-1} e_1 l(t)` and the
//! constraint normals are the columns of `N = V_basis W^{-1} G`.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{AMetric, Polyhedron};
use crate::linalg::{self, EPS};
use crate::network::{Loading, ValidatedNetwork};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConstructionError {
    #[error("construction failed at {stage}: {reason}")]
    ConstructionFailed { stage: &'static str, reason: String },
    #[error("W is singular (condition number {condition:e})")]
    SingularW { condition: f64 },
}

fn failed(stage: &'static str, reason: String) -> ConstructionError {
    ConstructionError::ConstructionFailed { stage, reason }
}

/// The sweeping process of an elastoplastic network.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepingProcess {
    m: usize,
    n: usize,
    kinematic: DMatrix<f64>,
    load_location: DVector<f64>,
    m_aux: DMatrix<f64>,
    v_basis: DMatrix<f64>,
    d_perp: DMatrix<f64>,
    frame: DMatrix<f64>,
    w: DMatrix<f64>,
    w_inv: DMatrix<f64>,
    bar_l: DVector<f64>,
    normals: DMatrix<f64>,
    metric: AMetric,
    gram: DMatrix<f64>,
    c_minus: DVector<f64>,
    c_plus: DVector<f64>,
    loading: Loading,
    period: Option<f64>,
}

/// `M` (n×(n-2)) with `Rᵀ D M = 0` and `rank(DM) = n - 2`.
pub fn compute_m(net: &ValidatedNetwork) -> Result<DMatrix<f64>, ConstructionError> {
    let d = net.kinematic();
    let n = net.n();
    let u = d.transpose() * net.load_location();
    let k = linalg::null_space(d);
    if k.ncols() != 1 {
        return Err(failed(
            "M",
            alloc::format!("kernel of D has dimension {}, expected 1", k.ncols()),
        ));
    }
    let mut rows = DMatrix::zeros(2, n);
    rows.row_mut(0).copy_from(&u.transpose());
    rows.row_mut(1).copy_from(&k.column(0).transpose());
    let m = linalg::null_space(&rows);
    if m.ncols() != n - 2 {
        return Err(failed(
            "M",
            alloc::format!("found {} columns, expected {}", m.ncols(), n - 2),
        ));
    }
    Ok(m)
}

/// `V_basis` (m×d) spanning `{y : (DM)ᵀ A y = 0}`, taken as `A^{-1}` times an
/// orthonormal basis of `ker (DM)ᵀ`.
pub fn compute_v_basis(
    net: &ValidatedNetwork,
    m_aux: &DMatrix<f64>,
) -> Result<DMatrix<f64>, ConstructionError> {
    let m = net.m();
    let dim = m + 2 - net.n();
    let dm = net.kinematic() * m_aux;
    let z = if dm.ncols() == 0 {
        DMatrix::identity(m, m)
    } else {
        linalg::null_space(&dm.transpose())
    };
    if z.ncols() != dim {
        return Err(failed(
            "V_basis",
            alloc::format!("kernel has dimension {}, expected {}", z.ncols(), dim),
        ));
    }
    let a = net.stiffness();
    let mut v = z;
    for (i, mut row) in v.row_iter_mut().enumerate() {
        row /= a[i];
    }
    Ok(v)
}

/// `D⊥` (m×(m-n+1)), an orthonormal basis of `ker Dᵀ`.
pub fn compute_dperp(net: &ValidatedNetwork) -> Result<DMatrix<f64>, ConstructionError> {
    let p = linalg::null_space(&net.kinematic().transpose());
    let expected = net.m() + 1 - net.n();
    if p.ncols() != expected {
        return Err(failed(
            "Dperp",
            alloc::format!("kernel of Dᵀ has dimension {}, expected {}", p.ncols(), expected),
        ));
    }
    Ok(p)
}

/// Combine user- or solver-supplied `M`, `V_basis`, `D⊥` into the process.
pub fn assemble_process(
    net: &ValidatedNetwork,
    m_aux: DMatrix<f64>,
    v_basis: DMatrix<f64>,
    d_perp: DMatrix<f64>,
) -> Result<SweepingProcess, ConstructionError> {
    let (m, n) = (net.m(), net.n());
    let dim = m + 2 - n;
    if v_basis.shape() != (m, dim) {
        return Err(failed(
            "assemble",
            alloc::format!("V_basis has shape {:?}, expected ({m}, {dim})", v_basis.shape()),
        ));
    }
    if d_perp.shape() != (m, dim - 1) {
        return Err(failed(
            "assemble",
            alloc::format!("Dperp has shape {:?}, expected ({m}, {})", d_perp.shape(), dim - 1),
        ));
    }
    if m_aux.shape() != (n, n - 2) {
        return Err(failed(
            "assemble",
            alloc::format!("M has shape {:?}, expected ({n}, {})", m_aux.shape(), n - 2),
        ));
    }
    let r = net.load_location();
    let mut frame = DMatrix::zeros(dim, m);
    frame.row_mut(0).copy_from(&r.transpose());
    frame.rows_mut(1, dim - 1).copy_from(&d_perp.transpose());
    let w = &frame * &v_basis;
    let condition = linalg::condition_number(&w);
    let w_inv = linalg::inverse(&w, 1e3 * EPS * dim as f64)
        .ok_or(ConstructionError::SingularW { condition })?;
    let mut e1 = DVector::zeros(dim);
    e1[0] = 1.0;
    let bar_l = &w_inv * e1;
    let normals = &v_basis * &w_inv * &frame;
    let metric = AMetric::new(net.stiffness());
    let gram = metric.gram(&v_basis);
    Ok(SweepingProcess {
        m,
        n,
        kinematic: net.kinematic().clone(),
        load_location: r,
        m_aux,
        v_basis,
        d_perp,
        frame,
        w,
        w_inv,
        bar_l,
        normals,
        metric,
        gram,
        c_minus: net.c_minus(),
        c_plus: net.c_plus(),
        loading: net.loading(),
        period: net.spec().period,
    })
}

/// Full construction with the deterministic null-space choices.
pub fn build_process(net: &ValidatedNetwork) -> Result<SweepingProcess, ConstructionError> {
    let m_aux = compute_m(net)?;
    let v = compute_v_basis(net, &m_aux)?;
    let p = compute_dperp(net)?;
    assemble_process(net, m_aux, v, p)
}

/// Residuals of the structural identities, each on matrices scaled to unit
/// spectral norm.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    /// `Rᵀ D M`.
    pub rtdm: f64,
    pub rank_dm: usize,
    /// `(DM)ᵀ A V_basis`.
    pub dm_a_v: f64,
    pub rank_v: usize,
    /// `D⊥ᵀ D`.
    pub dperp_d: f64,
    pub rank_dperp: usize,
    pub w_condition: f64,
    /// `max |<e_j, A V v> - <n_j, A V v>|` over a basis of `V`.
    pub normals: f64,
}

impl InvariantReport {
    pub fn max_residual(&self) -> f64 {
        self.rtdm.max(self.dm_a_v).max(self.dperp_d).max(self.normals)
    }

    /// All residuals below `tol` and all ranks as required.
    pub fn holds(&self, proc: &SweepingProcess, tol: f64) -> bool {
        self.max_residual() < tol
            && self.rank_dm == proc.n - 2
            && self.rank_v == proc.dim()
            && self.rank_dperp == proc.dim() - 1
            && self.w_condition.is_finite()
    }
}

/// Largest entry of a residual relative to the product of the factor norms.
fn relative(res: &DMatrix<f64>, scale: f64) -> f64 {
    if res.is_empty() {
        return 0.0;
    }
    let r = linalg::max_abs(res);
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

impl SweepingProcess {
    /// Dimension `d = m - n + 2` of the state space.
    pub fn dim(&self) -> usize {
        self.v_basis.ncols()
    }

    pub fn springs(&self) -> usize {
        self.m
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn kinematic(&self) -> &DMatrix<f64> {
        &self.kinematic
    }

    pub fn load_location(&self) -> &DVector<f64> {
        &self.load_location
    }

    pub fn m_aux(&self) -> &DMatrix<f64> {
        &self.m_aux
    }

    pub fn v_basis(&self) -> &DMatrix<f64> {
        &self.v_basis
    }

    pub fn d_perp(&self) -> &DMatrix<f64> {
        &self.d_perp
    }

    /// `G = [Rᵀ; D⊥ᵀ]`, d×m.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn w_inv(&self) -> &DMatrix<f64> {
        &self.w_inv
    }

    pub fn bar_l(&self) -> &DVector<f64> {
        &self.bar_l
    }

    /// `N`, whose column `j` is `n_j`.
    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn normal(&self, j: usize) -> DVector<f64> {
        self.normals.column(j).into_owned()
    }

    pub fn metric(&self) -> &AMetric {
        &self.metric
    }

    pub fn stiffness(&self) -> &DVector<f64> {
        self.metric.weights()
    }

    /// `V_basisᵀ A V_basis`, the metric in reduced coordinates.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn c_minus(&self) -> &DVector<f64> {
        &self.c_minus
    }

    pub fn c_plus(&self) -> &DVector<f64> {
        &self.c_plus
    }

    pub fn loading(&self) -> Loading {
        self.loading
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn w_condition(&self) -> f64 {
        linalg::condition_number(&self.w)
    }

    /// The same process under another affine loading.
    pub fn with_loading(&self, loading: Loading) -> Self {
        Self {
            loading,
            ..self.clone()
        }
    }

    /// The same process with other stress limits.
    pub fn with_limits(&self, c_minus: DVector<f64>, c_plus: DVector<f64>) -> Self {
        Self {
            c_minus,
            c_plus,
            ..self.clone()
        }
    }

    /// `c(t) = -V_basis L̄ l(t)`.
    pub fn moving_offset(&self, t: f64) -> DVector<f64> {
        &self.v_basis * &self.bar_l * (-self.loading.at(t))
    }

    /// `c' = -V_basis L̄ l1`, constant for affine loading.
    pub fn offset_rate(&self) -> DVector<f64> {
        &self.v_basis * &self.bar_l * (-self.loading.l1)
    }

    /// Stresses `s = A (y - c(t))`.
    pub fn stress_from_state(&self, y: &DVector<f64>, t: f64) -> DVector<f64> {
        self.metric.apply(&(y - self.moving_offset(t)))
    }

    /// Inverse of [`Self::stress_from_state`] on `V`.
    pub fn state_from_stress(&self, s: &DVector<f64>, t: f64) -> DVector<f64> {
        self.metric.apply_inverse(s) + self.moving_offset(t)
    }

    /// Coordinates `v` of the A-orthogonal projection of `y` onto `V`,
    /// so that `y = V_basis v` whenever `y ∈ V`.
    pub fn reduce(&self, y: &DVector<f64>) -> DVector<f64> {
        let rhs = self.v_basis.transpose() * self.metric.apply(y);
        self.gram
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or_else(|| linalg::lstsq(&self.gram, &rhs))
    }

    pub fn lift(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.v_basis * v
    }

    /// `C(t) = {y ∈ V : c⁻ <= A (y - c(t)) <= c⁺}` in reduced coordinates.
    pub fn constraint_polyhedron(&self, t: f64) -> Polyhedron {
        self.box_polyhedron(&self.moving_offset(t), &[])
    }

    /// Box constraints on `A (y - offset)` over all springs, plus equalities
    /// `(A (y - offset))_j = value` for the given pairs.
    pub fn box_polyhedron(&self, offset: &DVector<f64>, equalities: &[(usize, f64)]) -> Polyhedron {
        self.polyhedron_on(offset, &(0..self.m).collect::<Vec<_>>(), equalities)
    }

    /// Box constraints restricted to `springs`, plus equalities.
    pub fn polyhedron_on(
        &self,
        offset: &DVector<f64>,
        springs: &[usize],
        equalities: &[(usize, f64)],
    ) -> Polyhedron {
        let d = self.dim();
        let av = self.metric.apply_rows(&self.v_basis);
        let a_off = self.metric.apply(offset);
        let k = springs.len();
        let mut b = DMatrix::zeros(2 * k, d);
        let mut rhs = DVector::zeros(2 * k);
        for (r, &j) in springs.iter().enumerate() {
            b.row_mut(2 * r).copy_from(&(-av.row(j)));
            rhs[2 * r] = -(self.c_minus[j] + a_off[j]);
            b.row_mut(2 * r + 1).copy_from(&av.row(j));
            rhs[2 * r + 1] = self.c_plus[j] + a_off[j];
        }
        let mut e = DMatrix::zeros(equalities.len(), d);
        let mut erhs = DVector::zeros(equalities.len());
        for (r, &(j, value)) in equalities.iter().enumerate() {
            e.row_mut(r).copy_from(&av.row(j));
            erhs[r] = value + a_off[j];
        }
        Polyhedron {
            metric: self.gram.clone(),
            eq_matrix: e,
            eq_rhs: erhs,
            ineq_matrix: b,
            ineq_rhs: rhs,
        }
    }

    /// Residuals of every structural identity of the construction.
    pub fn invariant_report(&self) -> InvariantReport {
        let d = &self.kinematic;
        let sd = linalg::spectral_norm(d);
        let sm = linalg::spectral_norm(&self.m_aux);
        let sv = linalg::spectral_norm(&self.v_basis);
        let sa = self.metric.weights().amax();
        let dm = d * &self.m_aux;
        let rtdm = DMatrix::from_row_slice(1, dm.ncols(), (self.load_location.transpose() * &dm).as_slice());
        let av = self.metric.apply_rows(&self.v_basis);
        let dm_a_v = dm.transpose() * &av;
        let dperp_d = self.d_perp.transpose() * d;
        let nav = self.normals.transpose() * &av;
        let rank_dm = if dm.ncols() == 0 { 0 } else { linalg::rank(&dm) };
        InvariantReport {
            rtdm: relative(&rtdm, self.load_location.norm() * sd * sm),
            rank_dm,
            dm_a_v: relative(&dm_a_v, sd * sm * sa * sv),
            rank_v: linalg::rank(&self.v_basis),
            dperp_d: relative(&dperp_d, linalg::spectral_norm(&self.d_perp) * sd),
            rank_dperp: linalg::rank(&self.d_perp),
            w_condition: self.w_condition(),
            normals: relative(&(&av - nav), linalg::spectral_norm(&av)),
        }
    }
}
