//! Stability margins and finite-time certificates.
//!
//! `ε0` is the A-distance from `-c'` to the relative boundary of
//! `cone{α n_j : (α, j) ∈ I0}`. At a facet (`|I0| < d`) the margin is
//! corrected by `σ_i`, the squared A-operator norm of the decomposition map
//! `𝓛_i`. The certified time is `τ_d = diameter / ε`.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::construction::SweepingProcess;
use crate::facets::{format_family, Feasibility, ScenarioEvaluation, SignedIndex};
use crate::geometry::{distance_to_cone_boundary, ConeSpec, GeometryError};
use crate::linalg::{self, sqrt, EPS};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CertificateError {
    #[error("{family} is reducible or -c' lies on the cone boundary, the margin vanishes")]
    ReducibleOrBoundary { family: String },
    #[error("loading rate is zero")]
    ZeroLoadingRate,
    #[error("decomposition system for {family} is singular")]
    SingularVertexSystem { family: String },
    #[error("symmetric eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("scenario {scenario} is not feasible: {reasons}")]
    InfeasibleCandidate { scenario: usize, reasons: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The rule used to combine `ε0` and the `σ_i`, recorded in every
/// certificate.
pub const EPS_RULE: &str = "eps = eps0 / max_i sqrt(max(sigma_i, 1))";

fn signed_normals(proc: &SweepingProcess, family: &[SignedIndex]) -> ConeSpec {
    let cols: Vec<DVector<f64>> = family
        .iter()
        .map(|s| proc.normal(s.spring) * s.sign.value())
        .collect();
    ConeSpec::labelled(
        if cols.is_empty() {
            DMatrix::zeros(proc.springs(), 0)
        } else {
            DMatrix::from_columns(&cols)
        },
        family.to_vec(),
    )
}

/// `ε0 = dist^A(-c', ∂ cone{α n_j : (α, j) ∈ I0})`.
pub fn compute_eps0(proc: &SweepingProcess, i0: &[SignedIndex]) -> Result<f64, CertificateError> {
    if proc.loading().l1 == 0.0 {
        return Err(CertificateError::ZeroLoadingRate);
    }
    let x = -proc.offset_rate();
    let cone = signed_normals(proc, i0);
    match distance_to_cone_boundary(proc.metric(), &x, &cone) {
        Ok(d) if d > 0.0 => Ok(d),
        Ok(_) | Err(GeometryError::NotStrictlyInside { .. }) | Err(GeometryError::NotInSpan { .. }) => {
            Err(CertificateError::ReducibleOrBoundary {
                family: format_family(i0),
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// `𝓛_i = N_{I0} [(G E_{I0 ∪ I_i})^{-1}]_{first |I0| rows} G`, the map taking
/// `ξ ∈ span{n_j}` to its `I0` component.
pub fn compute_li(
    proc: &SweepingProcess,
    i0: &[SignedIndex],
    ii: &[SignedIndex],
) -> Result<DMatrix<f64>, CertificateError> {
    let d = proc.dim();
    let mut springs: Vec<usize> = i0.iter().map(|s| s.spring).collect();
    springs.extend(ii.iter().map(|s| s.spring));
    let mut all = i0.to_vec();
    all.extend_from_slice(ii);
    let singular = || CertificateError::SingularVertexSystem {
        family: format_family(&all),
    };
    if springs.len() != d {
        return Err(singular());
    }
    let g = proc.frame();
    let sys = linalg::select_columns(g, &springs);
    let inv = linalg::inverse(&sys, 1e3 * EPS * d as f64).ok_or_else(singular)?;
    let k = i0.len();
    let top = inv.rows(0, k).into_owned();
    let n_i0 = linalg::select_columns(proc.normals(), &springs[..k]);
    Ok(n_i0 * top * g)
}

/// Largest eigenvalue of `(√A 𝓛 √A^{-1})ᵀ (√A 𝓛 √A^{-1})`.
pub fn compute_sigma(proc: &SweepingProcess, li: &DMatrix<f64>) -> Result<f64, CertificateError> {
    let a = proc.stiffness();
    let m = li.nrows();
    let s = DMatrix::from_fn(m, m, |i, j| sqrt(a[i]) * li[(i, j)] / sqrt(a[j]));
    let sym = s.transpose() * &s;
    let eig = SymmetricEigen::try_new(sym, EPS, 10_000).ok_or(CertificateError::EigenFailure)?;
    Ok(eig.eigenvalues.iter().copied().fold(0.0, f64::max))
}

/// `||A^{-1} c⁺ - A^{-1} c⁻||^A = sqrt(Σ (c⁺_j - c⁻_j)² / a_j)`.
pub fn compute_diameter_bound(proc: &SweepingProcess) -> f64 {
    let a = proc.stiffness();
    let s: f64 = (0..proc.springs())
        .map(|j| {
            let w = proc.c_plus()[j] - proc.c_minus()[j];
            w * w / a[j]
        })
        .sum();
    sqrt(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateOptions {
    /// Compute `ε0`, `σ_i` and `τ_d`; otherwise only the qualitative
    /// conclusion is issued.
    pub quantitative: bool,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self { quantitative: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    /// `|I0| = d`: every solution reaches the single vertex `y*,0`.
    Vertex,
    /// `|I0| < d`: every solution reaches `conv{y*,i}`.
    Facet,
    /// Strict alignment and feasibility only, no time bound.
    Qualitative,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::Vertex => "Vertex",
            CertificateKind::Facet => "Facet",
            CertificateKind::Qualitative => "Qualitative",
        }
    }
}

/// A finite-time stability certificate for one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub scenario: usize,
    pub i0: Vec<SignedIndex>,
    pub kind: CertificateKind,
    pub eps0: Option<f64>,
    /// `σ_i` per vertex as computed (empty for vertex certificates).
    pub sigma: Vec<f64>,
    /// `max_i sqrt(max(σ_i, 1))`, 1 for vertex certificates.
    pub correction: f64,
    pub eps: Option<f64>,
    pub diameter_bound: f64,
    pub tau_d: Option<f64>,
    /// `A y*,0` or the vertices `A y*,i` of the terminal stress polytope.
    pub terminal_stresses: Vec<DVector<f64>>,
    pub eps_rule: &'static str,
    /// `Some(true)` when a period `T >= τ_d` was supplied.
    pub period_covers_tau: Option<bool>,
}

impl Certificate {
    pub fn is_quantitative(&self) -> bool {
        self.kind != CertificateKind::Qualitative
    }
}

/// Combine margins into a certificate for a feasible, strict scenario.
pub fn assemble_certificate(
    proc: &SweepingProcess,
    eval: &ScenarioEvaluation,
    options: &CertificateOptions,
) -> Result<Certificate, CertificateError> {
    let sc = &eval.scenario;
    if eval.feasibility.verdict != Feasibility::Feasible || !sc.i0.strict {
        let mut reasons = eval.feasibility.violations();
        if !sc.i0.strict {
            reasons.push(String::from("loading direction on the cone boundary"));
        }
        return Err(CertificateError::InfeasibleCandidate {
            scenario: sc.number,
            reasons: reasons.join("; "),
        });
    }
    let terminal_stresses: Vec<DVector<f64>> = eval.vertices.iter().map(|v| v.stress.clone()).collect();
    let diameter_bound = compute_diameter_bound(proc);
    let i0 = sc.i0.members.clone();
    if !options.quantitative {
        return Ok(Certificate {
            scenario: sc.number,
            i0,
            kind: CertificateKind::Qualitative,
            eps0: None,
            sigma: Vec::new(),
            correction: 1.0,
            eps: None,
            diameter_bound,
            tau_d: None,
            terminal_stresses,
            eps_rule: EPS_RULE,
            period_covers_tau: None,
        });
    }
    let eps0 = compute_eps0(proc, &i0)?;
    let (kind, sigma) = match &sc.flips {
        None => (CertificateKind::Vertex, Vec::new()),
        Some(f) => {
            let sigma = f
                .families
                .iter()
                .map(|ii| compute_sigma(proc, &compute_li(proc, &i0, ii)?))
                .collect::<Result<Vec<_>, _>>()?;
            (CertificateKind::Facet, sigma)
        }
    };
    let correction = sigma.iter().map(|&s| sqrt(s.max(1.0))).fold(1.0, f64::max);
    let eps = eps0 / correction;
    let tau_d = diameter_bound / eps;
    Ok(Certificate {
        scenario: sc.number,
        i0,
        kind,
        eps0: Some(eps0),
        sigma,
        correction,
        eps: Some(eps),
        diameter_bound,
        tau_d: Some(tau_d),
        terminal_stresses,
        eps_rule: EPS_RULE,
        period_covers_tau: proc.period().map(|t| t >= tau_d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::build_process;
    use crate::facets::{enumerate_scenarios, evaluate_scenario, Sign, DEFAULT_TOL_FEAS};
    use crate::network::{five_spring_network, validate_network, Loading};

    fn proc_with(a: [f64; 5], c: [f64; 5], l1: f64) -> SweepingProcess {
        let cm = c.map(|x| -x);
        let net = validate_network(five_spring_network(a, cm, c, Loading::new(0.0, l1))).unwrap();
        build_process(&net).unwrap()
    }

    fn p(j: usize) -> SignedIndex {
        SignedIndex::plus(j - 1)
    }

    #[test]
    fn eps0_unit_values() {
        let proc = proc_with([1.0; 5], [1.0; 5], 1.0);
        let e = compute_eps0(&proc, &[p(1), p(2)]).unwrap();
        assert!((e - libm::sqrt(0.6)).abs() < 1e-12);
        let e = compute_eps0(&proc, &[p(1), SignedIndex::minus(2), p(5)]).unwrap();
        assert!((e - libm::sqrt(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn eps0_scales_with_rate() {
        let e1 = compute_eps0(&proc_with([1.0, 2.0, 3.0, 1.5, 0.7], [1.0; 5], 1.0), &[p(4), p(5)]).unwrap();
        let e2 = compute_eps0(&proc_with([1.0, 2.0, 3.0, 1.5, 0.7], [1.0; 5], 2.0), &[p(4), p(5)]).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-12);
    }

    #[test]
    fn reducible_family_has_no_margin() {
        let proc = proc_with([1.0; 5], [1.0; 5], 1.0);
        assert!(matches!(
            compute_eps0(&proc, &[p(1), p(2), p(4)]),
            Err(CertificateError::ReducibleOrBoundary { .. })
        ));
    }

    #[test]
    fn li_fixes_i0_and_kills_ii() {
        let proc = proc_with([1.0, 2.0, 0.5, 3.0, 1.5], [1.0; 5], 1.0);
        let i0 = [p(1), p(2)];
        let ii = [SignedIndex::minus(2)];
        let l = compute_li(&proc, &i0, &ii).unwrap();
        let n1 = proc.normal(0);
        let n3 = proc.normal(2);
        assert!((&l * &n1 - &n1).amax() < 1e-12);
        assert!((&l * &n3).amax() < 1e-12);
    }

    #[test]
    fn sigma_unit_scenario1_and_zero_map() {
        let proc = proc_with([1.0; 5], [1.0; 5], 1.0);
        let l = compute_li(&proc, &[p(1), p(2)], &[p(3)]).unwrap();
        assert!((compute_sigma(&proc, &l).unwrap() - 1.5).abs() < 1e-10);
        assert_eq!(compute_sigma(&proc, &DMatrix::zeros(5, 5)).unwrap(), 0.0);
    }

    #[test]
    fn sigma_invariant_under_metric_scaling() {
        let a = [1.0, 2.0, 0.5, 3.0, 1.5];
        let p1 = proc_with(a, [1.0; 5], 1.0);
        let p2 = proc_with(a.map(|x| 7.0 * x), [1.0; 5], 1.0);
        let s1 = compute_sigma(&p1, &compute_li(&p1, &[p(4), p(5)], &[p(2)]).unwrap()).unwrap();
        let s2 = compute_sigma(&p2, &compute_li(&p2, &[p(4), p(5)], &[p(2)]).unwrap()).unwrap();
        assert!((s1 - s2).abs() < 1e-10 * s1);
    }

    #[test]
    fn diameter_bound_examples() {
        let proc = proc_with([1.0; 5], [1.0; 5], 1.0);
        assert!((compute_diameter_bound(&proc) - libm::sqrt(20.0)).abs() < 1e-12);
        let flat = proc.with_limits(DVector::zeros(5), DVector::zeros(5));
        assert_eq!(compute_diameter_bound(&flat), 0.0);
    }

    #[test]
    fn certificates_for_scenarios_8_and_1() {
        let proc = proc_with([1.0; 5], [3.0, 1.0, 1.0, 1.0, 3.0], 1.0);
        let sc = enumerate_scenarios(&proc, Sign::Plus, 1e-9).unwrap();
        let ev = evaluate_scenario(&proc, &sc[7], DEFAULT_TOL_FEAS).unwrap();
        let cert = assemble_certificate(&proc, &ev, &CertificateOptions::default()).unwrap();
        assert_eq!(cert.kind, CertificateKind::Vertex);
        let expect = cert.diameter_bound / libm::sqrt(1.0 / 3.0);
        assert!((cert.tau_d.unwrap() - expect).abs() < 1e-9);

        // scenario 1 is feasible for wide limits on springs 4, 5
        let proc = proc_with([1.0; 5], [1.0, 1.0, 0.5, 3.0, 3.0], 1.0);
        let ev = evaluate_scenario(&proc, &sc[0], DEFAULT_TOL_FEAS).unwrap();
        let cert = assemble_certificate(&proc, &ev, &CertificateOptions::default()).unwrap();
        assert_eq!(cert.kind, CertificateKind::Facet);
        let expect = libm::sqrt(1.5) * cert.diameter_bound / libm::sqrt(0.6);
        assert!((cert.tau_d.unwrap() - expect).abs() < 1e-9);

        let q = assemble_certificate(&proc, &ev, &CertificateOptions { quantitative: false }).unwrap();
        assert_eq!(q.kind, CertificateKind::Qualitative);
        assert!(q.tau_d.is_none());
    }

    #[test]
    fn infeasible_candidate_rejected() {
        let proc = proc_with([1.0; 5], [1.0; 5], 1.0);
        let sc = enumerate_scenarios(&proc, Sign::Plus, 1e-9).unwrap();
        let ev = evaluate_scenario(&proc, &sc[7], DEFAULT_TOL_FEAS).unwrap();
        match assemble_certificate(&proc, &ev, &CertificateOptions::default()) {
            Err(CertificateError::InfeasibleCandidate { scenario, reasons }) => {
                assert_eq!(scenario, 8);
                assert!(reasons.contains("c3+ + c4+ > c1+"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
