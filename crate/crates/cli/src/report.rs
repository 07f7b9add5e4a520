//! Report model and its JSON, markdown and CSV renderings.
//!
//! JSON carries every scalar at full (round-trip) precision; markdown and
//! CSV use fixed formats so repeated runs are byte-identical.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use sweepcert_core::certificate::{Certificate, CertificateKind};
use sweepcert_core::facets::{format_family, CheckStatus, Feasibility, Scenario, Sign};
use sweepcert_core::simulator::Trajectory;
use sweepcert_core::SweepingProcess;

use crate::input::NetworkInput;
use crate::pipeline::{Analysis, ScenarioOutcome, SimulationOutcome, Stage};
use crate::PipelineError;

/// At least one quantitative certificate, or a non-certifying stage succeeded.
pub const EXIT_CERTIFIED: i32 = 0;
/// Invalid input or options, or a numerical failure.
pub const EXIT_ERROR: i32 = 1;
/// The run finished but no quantitative certificate exists.
pub const EXIT_NO_CERTIFICATE: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub m: usize,
    pub n: usize,
    pub rank_d: usize,
    pub rank_dtr: usize,
    pub rank_threshold_d: f64,
    pub rank_threshold_dtr: f64,
}

/// Matrices are row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProcessSummary {
    pub d: usize,
    pub w_condition: f64,
    pub invariant_residual: f64,
    #[serde(rename = "M")]
    pub m_aux: Vec<Vec<f64>>,
    #[serde(rename = "V_basis")]
    pub v_basis: Vec<Vec<f64>>,
    #[serde(rename = "Dperp")]
    pub d_perp: Vec<Vec<f64>>,
    /// `[Rᵀ; D⊥ᵀ]`.
    pub frame: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "W_inv")]
    pub w_inv: Vec<Vec<f64>>,
    #[serde(rename = "barL")]
    pub bar_l: Vec<f64>,
    /// Columns are the normals `n_j`.
    #[serde(rename = "N")]
    pub normals: Vec<Vec<f64>>,
    /// `c'`.
    pub offset_rate: Vec<f64>,
    pub diameter_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptionsEcho {
    pub tol_feas: f64,
    pub tol_arrive: f64,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub scenario_filter: Option<String>,
    pub direction: Option<String>,
    pub simulate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub number: usize,
    pub i0: Vec<String>,
    pub kind: &'static str,
    pub strict: bool,
    pub irreducible: bool,
    /// One-based.
    pub flip_springs: Vec<usize>,
    pub families: Vec<String>,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexRow {
    pub label: String,
    pub family: String,
    pub stress: Vec<f64>,
    pub expressions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityRow {
    pub vertex: String,
    pub spring: usize,
    pub condition: String,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub status: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistinctRow {
    pub spring: usize,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexTable {
    pub scenario: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub vertices: Vec<VertexRow>,
    pub inequalities: Vec<InequalityRow>,
    pub distinct: Vec<DistinctRow>,
    pub verdict: &'static str,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Eps0Row {
    pub scenario: usize,
    pub i0: String,
    pub eps0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaRow {
    pub scenario: usize,
    pub family: String,
    pub sigma: Option<f64>,
    /// `max(σ, 1)`.
    pub corrected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateRow {
    pub scenario: usize,
    pub kind: &'static str,
    pub i0: String,
    pub eps0: Option<f64>,
    pub sigma: Vec<f64>,
    pub correction: f64,
    pub eps: Option<f64>,
    pub eps_rule: &'static str,
    pub diameter_bound: f64,
    pub tau_d: Option<f64>,
    pub terminal_stresses: Vec<Vec<f64>>,
    pub period: Option<f64>,
    pub period_covers_tau: Option<bool>,
    pub conclusion: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejection {
    pub scenario: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovViolationRow {
    pub time: f64,
    pub rate: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovSummary {
    pub eps: f64,
    pub slack: f64,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<LyapunovViolationRow>,
    pub v0: f64,
    pub empirical_t1: Option<f64>,
    pub bound_linear: f64,
    pub bound_sqrt: f64,
    pub within_linear: Option<bool>,
    pub within_sqrt: Option<bool>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub scenario: usize,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub y0: Vec<f64>,
    pub initial_projection_distance: f64,
    pub tau_d: Option<f64>,
    pub arrival_time: Option<f64>,
    pub checked_at: Option<f64>,
    pub verdict: &'static str,
    pub distance: Option<f64>,
    pub stress_in_hull: bool,
    pub hull_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub terminal_stress: Vec<f64>,
    pub lyapunov: Option<LyapunovSummary>,
    pub csv: String,
}

/// Everything a run produced; later stages fill more sections.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub stage: &'static str,
    pub network: NetworkInput,
    pub validation: ValidationSummary,
    pub options: OptionsEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumeration_note: Option<String>,
    pub scenarios: Vec<ScenarioRow>,
    pub vertices: Vec<VertexTable>,
    pub eps0: Vec<Eps0Row>,
    pub sigma: Vec<SigmaRow>,
    pub certificates: Vec<CertificateRow>,
    pub rejected: Vec<Rejection>,
    pub simulations: Vec<SimulationSummary>,
    pub exit_code: i32,
}

pub fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::Validate => "validate",
        Stage::Construct => "construct",
        Stage::Enumerate => "enumerate",
        Stage::Certify => "certify",
        Stage::Simulate => "simulate",
        Stage::Report => "report",
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn sign_name(s: Sign) -> String {
    s.symbol().to_string()
}

fn kind_name(s: &Scenario) -> &'static str {
    if s.is_vertex() {
        "vertex"
    } else {
        "facet"
    }
}

fn status_name(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Satisfied => "satisfied",
        CheckStatus::Marginal => "marginal",
        CheckStatus::ViolatedLower => "violated_lower",
        CheckStatus::ViolatedUpper => "violated_upper",
    }
}

fn verdict_name(f: Feasibility) -> &'static str {
    match f {
        Feasibility::Feasible => "feasible",
        Feasibility::Marginal => "marginal",
        Feasibility::Infeasible => "infeasible",
    }
}

fn vertex_label(scenario: &Scenario, k: usize) -> String {
    if scenario.is_vertex() {
        String::from("y*,0")
    } else {
        format!("y*,{}", k + 1)
    }
}

pub fn csv_name(scenario: usize) -> String {
    format!("trajectory_scenario_{scenario}.csv")
}

fn process_summary(proc: &SweepingProcess) -> ProcessSummary {
    ProcessSummary {
        d: proc.dim(),
        w_condition: proc.w_condition(),
        invariant_residual: proc.invariant_report().max_residual(),
        m_aux: rows(proc.m_aux()),
        v_basis: rows(proc.v_basis()),
        d_perp: rows(proc.d_perp()),
        frame: rows(proc.frame()),
        w: rows(proc.w()),
        w_inv: rows(proc.w_inv()),
        bar_l: vec(proc.bar_l()),
        normals: rows(proc.normals()),
        offset_rate: vec(&proc.offset_rate()),
        diameter_bound: sweepcert_core::compute_diameter_bound(proc),
    }
}

fn scenario_row(s: &Scenario, selected: bool) -> ScenarioRow {
    ScenarioRow {
        number: s.number,
        i0: s.i0.members.iter().map(ToString::to_string).collect(),
        kind: kind_name(s),
        strict: s.i0.strict,
        irreducible: s.i0.irreducible,
        flip_springs: s.flips.as_ref().map(|f| f.springs.iter().map(|j| j + 1).collect()).unwrap_or_default(),
        families: s.describe_flips(),
        selected,
    }
}

fn vertex_table(o: &ScenarioOutcome) -> VertexTable {
    let s = &o.scenario;
    match &o.evaluation {
        Err(e) => VertexTable {
            scenario: s.number,
            error: Some(e.clone()),
            vertices: Vec::new(),
            inequalities: Vec::new(),
            distinct: Vec::new(),
            verdict: "error",
            violations: Vec::new(),
        },
        Ok(eval) => VertexTable {
            scenario: s.number,
            error: None,
            vertices: eval
                .vertices
                .iter()
                .enumerate()
                .map(|(k, v)| VertexRow {
                    label: vertex_label(s, k),
                    family: format_family(&v.family),
                    stress: vec(&v.stress),
                    expressions: (0..v.stress.len()).map(|j| v.formula.expression(j)).collect(),
                })
                .collect(),
            inequalities: eval
                .feasibility
                .checks
                .iter()
                .map(|c| InequalityRow {
                    vertex: vertex_label(s, c.vertex),
                    spring: c.spring + 1,
                    condition: c.describe(),
                    lower: c.lower,
                    value: c.value,
                    upper: c.upper,
                    status: status_name(c.status),
                })
                .collect(),
            distinct: eval
                .feasibility
                .distinct
                .iter()
                .map(|c| DistinctRow {
                    spring: c.spring + 1,
                    lower: c.lower,
                    upper: c.upper,
                    holds: c.holds,
                })
                .collect(),
            verdict: verdict_name(eval.feasibility.verdict),
            violations: eval.feasibility.violations(),
        },
    }
}

fn conclusion(c: &Certificate) -> String {
    let mut text = match (c.kind, c.tau_d) {
        (CertificateKind::Vertex, Some(t)) => format!("every solution has s(t) = A y*,0 for t >= {t:.6}"),
        (CertificateKind::Facet, Some(t)) => format!("every solution has s(t) in conv{{A y*,i}} for t >= {t:.6}"),
        _ => String::from("every solution eventually reaches the facet; no time bound"),
    };
    if c.period_covers_tau == Some(true) {
        text.push_str("; the period covers tau_d: globally one-period stable T-periodic solution");
    }
    text
}

fn certificate_row(c: &Certificate, period: Option<f64>) -> CertificateRow {
    CertificateRow {
        scenario: c.scenario,
        kind: c.kind.as_str(),
        i0: format_family(&c.i0),
        eps0: c.eps0,
        sigma: c.sigma.clone(),
        correction: c.correction,
        eps: c.eps,
        eps_rule: c.eps_rule,
        diameter_bound: c.diameter_bound,
        tau_d: c.tau_d,
        terminal_stresses: c.terminal_stresses.iter().map(vec).collect(),
        period,
        period_covers_tau: c.period_covers_tau,
        conclusion: conclusion(c),
    }
}

fn simulation_summary(s: &SimulationOutcome) -> SimulationSummary {
    let traj = &s.trajectory;
    let k = s.arrival.index.unwrap_or(traj.len().saturating_sub(1));
    SimulationSummary {
        scenario: s.scenario,
        dt: traj.dt,
        t_end: traj.times.last().copied().unwrap_or(0.0),
        steps: traj.len().saturating_sub(1),
        y0: vec(&s.y0),
        initial_projection_distance: traj.initial_projection_distance,
        tau_d: s.tau_d,
        arrival_time: traj.arrival_time,
        checked_at: s.arrival.time,
        verdict: if s.arrival.passed { "pass" } else { "fail" },
        distance: finite(s.arrival.distance),
        stress_in_hull: s.arrival.stress_in_hull,
        hull_residual: finite(s.arrival.hull_residual),
        reason: s.arrival.reason.clone(),
        terminal_stress: traj.stresses.get(k).map(vec).unwrap_or_default(),
        lyapunov: s.lyapunov.as_ref().map(|l| LyapunovSummary {
            eps: l.eps,
            slack: l.slack,
            checked: l.checked,
            violations: l.violations.len(),
            first_violation: l.first_violation().map(|v| LyapunovViolationRow {
                time: v.time,
                rate: v.rate,
                bound: v.bound,
            }),
            v0: l.v0,
            empirical_t1: l.empirical_t1,
            bound_linear: l.bound_linear,
            bound_sqrt: l.bound_sqrt,
            within_linear: l.within_linear,
            within_sqrt: l.within_sqrt,
            passed: l.passed(),
        }),
        csv: csv_name(s.scenario),
    }
}

impl AnalysisReport {
    pub fn from_analysis(a: &Analysis) -> Self {
        let net = &a.network;
        let (tol_d, tol_dtr) = net.rank_thresholds();
        let opts = &a.options;
        let mut rejected = Vec::new();
        let mut certificates = Vec::new();
        for o in &a.outcomes {
            match &o.certificate {
                Some(Ok(c)) => certificates.push(certificate_row(c, net.spec().period)),
                Some(Err(e)) => rejected.push(Rejection {
                    scenario: o.scenario.number,
                    reason: e.clone(),
                }),
                None => {}
            }
        }
        let certify = a.stage >= Stage::Certify;
        let exit_code = if !certify || a.has_quantitative_certificate() {
            EXIT_CERTIFIED
        } else {
            EXIT_NO_CERTIFICATE
        };
        Self {
            tool: "sweepcert",
            version: env!("CARGO_PKG_VERSION"),
            stage: stage_name(a.stage),
            network: a.input.clone(),
            validation: ValidationSummary {
                m: net.m(),
                n: net.n(),
                rank_d: net.rank_d(),
                rank_dtr: net.rank_dtr(),
                rank_threshold_d: tol_d,
                rank_threshold_dtr: tol_dtr,
            },
            options: OptionsEcho {
                tol_feas: opts.tol_feas,
                tol_arrive: opts.tol_arrive,
                dt: opts.dt,
                t_end: opts.t_end,
                scenario_filter: opts.scenarios.as_ref().map(|f| f.as_str().to_string()),
                direction: opts.direction.map(sign_name),
                simulate: opts.simulate,
            },
            process: a.process.as_ref().map(process_summary),
            direction: a.direction.map(sign_name),
            enumeration_note: a.enumeration_note.clone(),
            scenarios: a
                .scenarios
                .iter()
                .map(|s| scenario_row(s, a.outcomes.iter().any(|o| o.scenario.number == s.number)))
                .collect(),
            vertices: a.outcomes.iter().map(vertex_table).collect(),
            eps0: a
                .outcomes
                .iter()
                .filter_map(|o| {
                    let r = o.eps0.as_ref()?;
                    Some(Eps0Row {
                        scenario: o.scenario.number,
                        i0: format_family(&o.scenario.i0.members),
                        eps0: r.as_ref().ok().copied(),
                        error: r.as_ref().err().cloned(),
                    })
                })
                .collect(),
            sigma: a
                .outcomes
                .iter()
                .flat_map(|o| {
                    o.sigma.iter().map(move |(fam, r)| SigmaRow {
                        scenario: o.scenario.number,
                        family: format_family(fam),
                        sigma: r.as_ref().ok().copied(),
                        corrected: r.as_ref().ok().map(|s| s.max(1.0)),
                        error: r.as_ref().err().cloned(),
                    })
                })
                .collect(),
            certificates,
            rejected,
            simulations: a.simulations.iter().map(simulation_summary).collect(),
            exit_code,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        render_markdown(self)
    }
}

/// Fixed six-decimal format without negative zero.
pub fn fixed(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| String::from("-"), fixed)
}

fn list(xs: &[f64]) -> String {
    let inner: Vec<String> = xs.iter().map(|&x| fixed(x)).collect();
    format!("({})", inner.join(", "))
}

fn render_markdown(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "# sweepcert: {}\n", r.stage);
    let v = &r.validation;
    let _ = writeln!(w, "## Network\n");
    let _ = writeln!(w, "- springs m = {}, nodes n = {}", v.m, v.n);
    let _ = writeln!(w, "- rank D = {}, rank(D^T R) = {}", v.rank_d, v.rank_dtr);
    let _ = writeln!(w, "- a = {}", list(&r.network.a));
    let _ = writeln!(w, "- c- = {}", list(&r.network.c_minus));
    let _ = writeln!(w, "- c+ = {}", list(&r.network.c_plus));
    let _ = writeln!(w, "- l(t) = {} + {} t", fixed(r.network.loading.l0), fixed(r.network.loading.l1));
    if let Some(t) = r.network.period {
        let _ = writeln!(w, "- period T = {}", fixed(t));
    }
    if let Some(p) = &r.process {
        let _ = writeln!(w, "\n## Process\n");
        let _ = writeln!(w, "- d = {}", p.d);
        let _ = writeln!(w, "- cond(W) = {}", fixed(p.w_condition));
        let _ = writeln!(w, "- invariant residual = {:.3e}", p.invariant_residual);
        let _ = writeln!(w, "- diameter bound = {}", fixed(p.diameter_bound));
        let _ = writeln!(w, "- barL = {}", list(&p.bar_l));
    }
    if let Some(d) = &r.direction {
        let _ = writeln!(w, "- loading direction = {d}");
    }
    if let Some(note) = &r.enumeration_note {
        let _ = writeln!(w, "\nNo scenarios: {note}");
    }
    if !r.scenarios.is_empty() {
        let width = r.scenarios.iter().map(|s| s.families.len()).max().unwrap_or(0);
        let _ = writeln!(w, "\n## Scenarios\n");
        let mut head = String::from("| Scenario | I0 |");
        let mut rule = String::from("|---|---|");
        for k in 1..=width {
            let _ = write!(head, " I{k} |");
            rule.push_str("---|");
        }
        let _ = writeln!(w, "{head}\n{rule}");
        for s in &r.scenarios {
            let mut line = format!("| {} | {{{}}} |", s.number, s.i0.join(", "));
            for k in 0..width {
                let cell = s.families.get(k).map_or("", |f| f.split_once('=').map_or(f.as_str(), |x| x.1));
                let _ = write!(line, " {cell} |");
            }
            let _ = writeln!(w, "{line}");
        }
    }
    if !r.vertices.is_empty() {
        let _ = writeln!(w, "\n## Vertices and feasibility\n");
        for t in &r.vertices {
            let _ = writeln!(w, "### Scenario {} ({})\n", t.scenario, t.verdict);
            if let Some(e) = &t.error {
                let _ = writeln!(w, "error: {e}\n");
                continue;
            }
            let _ = writeln!(w, "| Vertex | Family | A y* | Value |\n|---|---|---|---|");
            for vx in &t.vertices {
                let _ = writeln!(
                    w,
                    "| {} | {} | ({}) | {} |",
                    vx.label,
                    vx.family,
                    vx.expressions.join(", "),
                    list(&vx.stress)
                );
            }
            let _ = writeln!(w, "\n| Vertex | Inequality | Value | Status |\n|---|---|---|---|");
            for c in &t.inequalities {
                let _ = writeln!(w, "| {} | {} | {} | {} |", c.vertex, c.condition, fixed(c.value), c.status);
            }
            for dcheck in &t.distinct {
                let _ = writeln!(
                    w,
                    "| - | c{0}- < c{0}+ | {1} < {2} | {3} |",
                    dcheck.spring,
                    fixed(dcheck.lower),
                    fixed(dcheck.upper),
                    if dcheck.holds { "satisfied" } else { "violated" }
                );
            }
            if !t.violations.is_empty() {
                let _ = writeln!(w, "\nViolated: {}", t.violations.join("; "));
            }
            let _ = writeln!(w);
        }
    }
    if !r.eps0.is_empty() {
        let _ = writeln!(w, "## Distance eps0 to the cone boundary\n");
        let _ = writeln!(w, "| Scenario | I0 | eps0 |\n|---|---|---|");
        for e in &r.eps0 {
            let value = match (&e.eps0, &e.error) {
                (Some(x), _) => fixed(*x),
                (None, Some(err)) => format!("error: {err}"),
                (None, None) => String::from("-"),
            };
            let _ = writeln!(w, "| {} | {} | {} |", e.scenario, e.i0, value);
        }
    }
    if !r.sigma.is_empty() {
        let _ = writeln!(w, "\n## Corrections sigma\n");
        let _ = writeln!(w, "| Scenario | Ii | sigma | max(1, sigma) |\n|---|---|---|---|");
        for s in &r.sigma {
            let _ = writeln!(w, "| {} | {} | {} | {} |", s.scenario, s.family, opt(s.sigma), opt(s.corrected));
        }
    }
    if !r.certificates.is_empty() || !r.rejected.is_empty() {
        let _ = writeln!(w, "\n## Certificates\n");
        let _ = writeln!(w, "Rule: {}\n", sweepcert_core::certificate::EPS_RULE);
        let _ = writeln!(
            w,
            "| Scenario | Kind | eps0 | correction | eps | diameter | tau_d |\n|---|---|---|---|---|---|---|"
        );
        for c in &r.certificates {
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} | {} | {} | {} |",
                c.scenario,
                c.kind,
                opt(c.eps0),
                fixed(c.correction),
                opt(c.eps),
                fixed(c.diameter_bound),
                opt(c.tau_d)
            );
        }
        for c in &r.certificates {
            let _ = writeln!(w, "\n- scenario {}: {}", c.scenario, c.conclusion);
        }
        if !r.rejected.is_empty() {
            let _ = writeln!(w, "\nRejected:\n");
            for x in &r.rejected {
                let _ = writeln!(w, "- scenario {}: {}", x.scenario, x.reason);
            }
        }
    }
    if !r.simulations.is_empty() {
        let _ = writeln!(w, "\n## Simulations\n");
        let _ = writeln!(
            w,
            "| Scenario | dt | tau_d | arrival | distance | verdict | Lyapunov violations |\n|---|---|---|---|---|---|---|"
        );
        for s in &r.simulations {
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} | {} | {} | {} |",
                s.scenario,
                fixed(s.dt),
                opt(s.tau_d),
                opt(s.arrival_time),
                s.distance.map_or_else(|| String::from("-"), |d| format!("{d:.3e}")),
                s.verdict,
                s.lyapunov.as_ref().map_or_else(|| String::from("-"), |l| l.violations.to_string())
            );
        }
        for s in &r.simulations {
            if let Some(reason) = &s.reason {
                let _ = writeln!(w, "\n- scenario {}: {reason}", s.scenario);
            }
        }
    }
    let _ = writeln!(w, "\nExit code: {}", r.exit_code);
    out
}

/// `t, y1..ym, s1..sm, V` with 12 significant digits in exponent form.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<(), PipelineError> {
    let m = traj.states.first().map_or(0, |y| y.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::from("t")];
    header.extend((1..=m).map(|j| format!("y{j}")));
    header.extend((1..=m).map(|j| format!("s{j}")));
    header.push(String::from("V"));
    let err = |e: csv::Error| PipelineError::Output(e.to_string());
    w.write_record(&header).map_err(err)?;
    for k in 0..traj.len() {
        let mut rec = Vec::with_capacity(2 * m + 2);
        rec.push(format!("{:.12e}", traj.times[k]));
        rec.extend(traj.states[k].iter().map(|x| format!("{x:.12e}")));
        rec.extend(traj.stresses[k].iter().map(|x| format!("{x:.12e}")));
        rec.push(traj.lyapunov.get(k).map_or_else(String::new, |v| format!("{v:.12e}")));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| PipelineError::Output(e.to_string()))
}
