//! Catching-up integration of `-y' ∈ N^A_{C(t)}(y)` and checks of a
//! certificate along the computed trajectory.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DVector;
use thiserror::Error;

use crate::construction::SweepingProcess;
use crate::facets::{ScenarioEvaluation, SignedIndex};
use crate::geometry::{cone_membership, project_polyhedron, AMetric, ConeSpec, GeometryError, Polyhedron, QpOptions};
use crate::linalg::sqrt;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimulatorError {
    #[error("time step must be positive and finite, got {dt}")]
    InvalidStep { dt: f64 },
    #[error("final time must be nonnegative and finite, got {t_end}")]
    InvalidHorizon { t_end: f64 },
    #[error("speedup must be positive, got {speedup}")]
    InvalidSpeedup { speedup: f64 },
    #[error("initial state has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The attractor `F = conv{y*,i}`: `I0` constraints active and flipped
/// springs within their limits.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetFacet {
    pub i0: Vec<SignedIndex>,
    pub flip_springs: Vec<usize>,
    /// `A y*,i`.
    pub vertex_stresses: Vec<DVector<f64>>,
}

impl TargetFacet {
    pub fn from_evaluation(eval: &ScenarioEvaluation) -> Self {
        Self {
            i0: eval.scenario.i0.members.clone(),
            flip_springs: eval
                .scenario
                .flips
                .as_ref()
                .map(|f| f.springs.clone())
                .unwrap_or_default(),
            vertex_stresses: eval.vertices.iter().map(|v| v.stress.clone()).collect(),
        }
    }

    /// `F + c(t)` in reduced coordinates.
    pub fn polyhedron(&self, proc: &SweepingProcess, t: f64) -> Polyhedron {
        let eq: Vec<(usize, f64)> = self.i0.iter().map(|s| (s.spring, s.limit(proc))).collect();
        proc.polyhedron_on(&proc.moving_offset(t), &self.flip_springs, &eq)
    }
}

/// `V(x) = dist^A(y - c(t), F)²`.
pub fn lyapunov_value(
    proc: &SweepingProcess,
    target: &TargetFacet,
    y: &DVector<f64>,
    t: f64,
    qp: &QpOptions,
) -> Result<f64, SimulatorError> {
    let poly = target.polyhedron(proc, t);
    let v = proc.reduce(y);
    let p = project_polyhedron(&poly, &v, qp)?;
    let d = poly.dist(&v, &p.point);
    Ok(d * d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Arrival when `dist^A(y - c(t), F) <= tol_arrive`.
    pub tol_arrive: f64,
    pub qp: QpOptions,
}

impl SimulationOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            tol_arrive: DEFAULT_TOL_ARRIVE,
            qp: QpOptions::default(),
        }
    }
}

pub const DEFAULT_TOL_ARRIVE: f64 = 1e-6;

/// Step with `||c'||^A dt <= 1e-3 · diameter`.
pub fn default_dt(proc: &SweepingProcess, diameter_bound: f64) -> f64 {
    let speed = proc.metric().norm(&proc.offset_rate());
    if speed == 0.0 || diameter_bound == 0.0 {
        return 1e-3;
    }
    1e-3 * diameter_bound / speed
}

/// A computed trajectory on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub stresses: Vec<DVector<f64>>,
    /// `V(x(t_k))`, empty without a target.
    pub lyapunov: Vec<f64>,
    pub arrival_time: Option<f64>,
    /// `||y0 - proj^A(y0, C(0))||^A`.
    pub initial_projection_distance: f64,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last grid index with `t_k <= t`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let slack = 1e-9 * self.dt;
        self.times.iter().rposition(|&tk| tk <= t + slack)
    }
}

/// `y_next = proj^A(y_k, C(t_next))`.
pub fn catching_up_step(
    proc: &SweepingProcess,
    y: &DVector<f64>,
    t_next: f64,
    qp: &QpOptions,
) -> Result<DVector<f64>, SimulatorError> {
    let poly = proc.constraint_polyhedron(t_next);
    let v = proc.reduce(y);
    let p = project_polyhedron(&poly, &v, qp)?;
    Ok(proc.lift(&p.point))
}

fn grid(t_end: f64, dt: f64) -> Vec<f64> {
    let steps = libm::ceil(t_end / dt - 1e-9).max(0.0) as usize;
    (0..=steps).map(|k| (k as f64 * dt).min(t_end)).collect()
}

/// Implicit catching-up scheme from `y0` (projected onto `C(0)` first).
pub fn simulate(
    proc: &SweepingProcess,
    y0: &DVector<f64>,
    target: Option<&TargetFacet>,
    opts: &SimulationOptions,
) -> Result<Trajectory, SimulatorError> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(SimulatorError::InvalidStep { dt: opts.dt });
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(SimulatorError::InvalidHorizon { t_end: opts.t_end });
    }
    if y0.len() != proc.springs() {
        return Err(SimulatorError::DimensionMismatch {
            expected: proc.springs(),
            found: y0.len(),
        });
    }
    let times = grid(opts.t_end, opts.dt);
    // iterate in reduced coordinates so a stationary state stays bit-identical
    let step = |v: &DVector<f64>, t: f64| -> Result<DVector<f64>, SimulatorError> {
        Ok(project_polyhedron(&proc.constraint_polyhedron(t), v, &opts.qp)?.point)
    };
    let mut v = step(&proc.reduce(y0), 0.0)?;
    let initial_projection_distance = proc.metric().dist(y0, &proc.lift(&v));

    let mut states = Vec::with_capacity(times.len());
    let mut stresses = Vec::with_capacity(times.len());
    let mut lyapunov = Vec::new();
    let mut arrival_time = None;
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            v = step(&v, t)?;
        }
        let y = proc.lift(&v);
        if let Some(f) = target {
            let poly = f.polyhedron(proc, t);
            let p = project_polyhedron(&poly, &v, &opts.qp)?;
            let dist = poly.dist(&v, &p.point);
            if arrival_time.is_none() && dist <= opts.tol_arrive {
                arrival_time = Some(t);
            }
            lyapunov.push(dist * dist);
        }
        stresses.push(proc.stress_from_state(&y, t));
        states.push(y);
    }
    Ok(Trajectory {
        times,
        states,
        stresses,
        lyapunov,
        arrival_time,
        initial_projection_distance,
        dt: opts.dt,
    })
}

/// One failure of the discrete decrement inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovViolation {
    pub index: usize,
    pub time: f64,
    /// `(V_{k+1} - V_k) / dt`.
    pub rate: f64,
    /// `-2 ε sqrt(V_k) + slack`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovReport {
    pub eps: f64,
    pub slack: f64,
    pub checked: usize,
    pub violations: Vec<LyapunovViolation>,
    pub v0: f64,
    /// First time with `V <= v_tol`.
    pub empirical_t1: Option<f64>,
    /// `V(x(0)) / ε`.
    pub bound_linear: f64,
    /// `sqrt(V(x(0))) / ε`.
    pub bound_sqrt: f64,
    pub within_linear: Option<bool>,
    pub within_sqrt: Option<bool>,
}

impl LyapunovReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&LyapunovViolation> {
        self.violations.first()
    }
}

/// Slack `10 · dt · ||c'||^A` for the decrement check.
pub fn default_slack(proc: &SweepingProcess, dt: f64) -> f64 {
    10.0 * dt * proc.metric().norm(&proc.offset_rate())
}

/// Check `(V_{k+1} - V_k)/dt <= -2 ε sqrt(V_k) + slack` while `V_k > v_tol`.
pub fn lyapunov_monitor(traj: &Trajectory, eps: f64, slack: f64, v_tol: f64) -> LyapunovReport {
    let v = &traj.lyapunov;
    let mut violations = Vec::new();
    let mut checked = 0;
    for k in 0..v.len().saturating_sub(1) {
        if v[k] <= v_tol {
            continue;
        }
        checked += 1;
        let h = traj.times[k + 1] - traj.times[k];
        let rate = (v[k + 1] - v[k]) / h;
        let bound = -2.0 * eps * sqrt(v[k]) + slack;
        if rate > bound {
            violations.push(LyapunovViolation {
                index: k,
                time: traj.times[k],
                rate,
                bound,
            });
        }
    }
    let v0 = v.first().copied().unwrap_or(0.0);
    let empirical_t1 = v.iter().position(|&x| x <= v_tol).map(|k| traj.times[k]);
    let bound_linear = v0 / eps;
    let bound_sqrt = sqrt(v0) / eps;
    LyapunovReport {
        eps,
        slack,
        checked,
        violations,
        v0,
        empirical_t1,
        bound_linear,
        bound_sqrt,
        within_linear: empirical_t1.map(|t| t <= bound_linear + traj.dt),
        within_sqrt: empirical_t1.map(|t| t <= bound_sqrt + traj.dt),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReparameterizationReport {
    pub speedup: f64,
    pub max_deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Run with `l1` over `[0, t_end]` and with `speedup · l1` over
/// `[0, t_end / speedup]` at step `dt / speedup`; grid points correspond
/// one to one and the states must agree within `10 · dt · ||c'||^A`.
pub fn reparameterization_test(
    proc: &SweepingProcess,
    y0: &DVector<f64>,
    t_end: f64,
    dt: f64,
    speedup: f64,
    qp: &QpOptions,
) -> Result<ReparameterizationReport, SimulatorError> {
    if !(speedup > 0.0 && speedup.is_finite()) {
        return Err(SimulatorError::InvalidSpeedup { speedup });
    }
    let slow = simulate(proc, y0, None, &SimulationOptions { qp: *qp, ..SimulationOptions::new(dt, t_end) })?;
    let mut loading = proc.loading();
    loading.l1 *= speedup;
    let fast_proc = proc.with_loading(loading);
    let fast = simulate(
        &fast_proc,
        y0,
        None,
        &SimulationOptions {
            qp: *qp,
            ..SimulationOptions::new(dt / speedup, t_end / speedup)
        },
    )?;
    let n = slow.len().min(fast.len());
    let metric = proc.metric();
    let max_deviation = (0..n)
        .map(|k| metric.dist(&slow.states[k], &fast.states[k]))
        .fold(0.0, f64::max);
    let threshold = default_slack(proc, dt);
    Ok(ReparameterizationReport {
        speedup,
        max_deviation,
        threshold,
        passed: slow.len() == fast.len() && max_deviation < threshold.max(1e-12),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalVerdict {
    pub passed: bool,
    pub index: Option<usize>,
    pub time: Option<f64>,
    /// `dist^A(y - c(t), F)` at the checked time.
    pub distance: f64,
    pub stress_in_hull: bool,
    pub hull_residual: f64,
    pub reason: Option<String>,
}

/// Is `s` a convex combination of the columns given, within `tol`?
/// Decided by cone membership of `(s, 1)` over `(p_i, 1)`.
pub fn in_convex_hull(points: &[DVector<f64>], s: &DVector<f64>, tol: f64) -> (bool, f64) {
    let m = s.len();
    let lift = |p: &DVector<f64>| DVector::from_fn(m + 1, |i, _| if i < m { p[i] } else { 1.0 });
    let cols: Vec<DVector<f64>> = points.iter().map(lift).collect();
    let cone = ConeSpec::from_columns(m + 1, &cols);
    let r = cone_membership(&AMetric::identity(m + 1), &lift(s), &cone, tol);
    (r.inside, r.residual)
}

/// `y(τ_d) - c(τ_d) ∈ F` within `tol_arrive`, and `s(τ_d) ∈ conv{A y*,i}`.
/// The last grid point not after `τ_d` is used.
pub fn arrival_check(
    proc: &SweepingProcess,
    traj: &Trajectory,
    target: &TargetFacet,
    tau_d: f64,
    tol_arrive: f64,
    qp: &QpOptions,
) -> Result<ArrivalVerdict, SimulatorError> {
    let Some(k) = traj.index_at(tau_d) else {
        return Ok(ArrivalVerdict {
            passed: false,
            index: None,
            time: None,
            distance: f64::INFINITY,
            stress_in_hull: false,
            hull_residual: f64::INFINITY,
            reason: Some(String::from("trajectory is empty")),
        });
    };
    let t = traj.times[k];
    let distance = match lyapunov_value(proc, target, &traj.states[k], t, qp) {
        Ok(v) => sqrt(v),
        Err(SimulatorError::Geometry(GeometryError::InfeasibleSet { .. })) => {
            return Ok(ArrivalVerdict {
                passed: false,
                index: Some(k),
                time: Some(t),
                distance: f64::INFINITY,
                stress_in_hull: false,
                hull_residual: f64::INFINITY,
                reason: Some(String::from("target facet is empty")),
            })
        }
        Err(e) => return Err(e),
    };
    let s = &traj.stresses[k];
    let scale = s.amax().max(1.0);
    let (stress_in_hull, hull_residual) = in_convex_hull(&target.vertex_stresses, s, tol_arrive * scale.max(1.0));
    let short = traj.times.last().map_or(true, |&last| last + 1e-9 * traj.dt < tau_d - traj.dt);
    let mut reason = None;
    if short {
        reason = Some(String::from("trajectory ends before tau_d"));
    } else if distance > tol_arrive {
        reason = Some(alloc::format!("distance {distance:e} to the facet exceeds {tol_arrive:e}"));
    } else if !stress_in_hull {
        reason = Some(alloc::format!("stress outside the terminal hull (residual {hull_residual:e})"));
    }
    Ok(ArrivalVerdict {
        passed: reason.is_none(),
        index: Some(k),
        time: Some(t),
        distance,
        stress_in_hull,
        hull_residual,
        reason,
    })
}

/// Steps for `v_{k+1} = max(0, (sqrt(v_k) - ε dt)²)` to reach zero.
pub fn comparison_steps(v0: f64, eps: f64, dt: f64) -> usize {
    let mut v = v0;
    let mut k = 0;
    while v > 0.0 {
        let r = sqrt(v) - eps * dt;
        v = if r > 0.0 { r * r } else { 0.0 };
        k += 1;
    }
    k
}

/// The bound `ceil(sqrt(v0) / (ε dt)) + 1` on [`comparison_steps`].
pub fn comparison_step_bound(v0: f64, eps: f64, dt: f64) -> usize {
    libm::ceil(sqrt(v0) / (eps * dt)) as usize + 1
}
