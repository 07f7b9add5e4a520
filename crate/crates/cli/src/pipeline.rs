//! Validate, construct, enumerate, certify and simulate, in that order,
//! stopping at the requested stage.

use std::ops::RangeInclusive;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use rayon::ThreadPool;
use sweepcert_core::certificate::{
    assemble_certificate, compute_diameter_bound, compute_eps0, compute_li, compute_sigma, Certificate,
    CertificateOptions,
};
use sweepcert_core::construction::build_process;
use sweepcert_core::facets::{
    enumerate_scenarios, evaluate_scenario, loading_direction, FacetError, Scenario, ScenarioEvaluation, Sign,
    SignedIndex, DEFAULT_TOL_FEAS,
};
use sweepcert_core::network::{validate_network, ValidatedNetwork};
use sweepcert_core::simulator::{
    arrival_check, default_dt, default_slack, lyapunov_monitor, simulate, ArrivalVerdict, LyapunovReport,
    SimulationOptions, TargetFacet, Trajectory, DEFAULT_TOL_ARRIVE,
};
use sweepcert_core::SweepingProcess;

use crate::input::NetworkInput;
use crate::PipelineError;

/// `V` below this counts as arrived in the Lyapunov monitor.
pub const LYAPUNOV_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Validate,
    Construct,
    Enumerate,
    Certify,
    Simulate,
    Report,
}

/// Scenario numbers such as `8`, `1,3` or `4-6,8`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioFilter {
    ranges: Vec<RangeInclusive<usize>>,
    text: String,
}

impl ScenarioFilter {
    pub fn contains(&self, number: usize) -> bool {
        self.ranges.iter().any(|r| r.contains(&number))
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl FromStr for ScenarioFilter {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PipelineError::Options(format!("invalid scenario filter {s:?}"));
        let mut ranges = Vec::new();
        for part in s.split(',').map(str::trim) {
            let (lo, hi) = match part.split_once('-') {
                Some((lo, hi)) => (lo.trim(), hi.trim()),
                None => (part, part),
            };
            let lo: usize = lo.parse().map_err(|_| bad())?;
            let hi: usize = hi.parse().map_err(|_| bad())?;
            if lo == 0 || hi < lo {
                return Err(bad());
            }
            ranges.push(lo..=hi);
        }
        Ok(Self {
            ranges,
            text: s.trim().to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    pub tol_feas: f64,
    pub tol_arrive: f64,
    /// Step size; defaults to `default_dt`.
    pub dt: Option<f64>,
    /// Horizon; defaults to `τ_d` of the certificate being simulated.
    pub t_end: Option<f64>,
    /// Run simulations in the `report` stage.
    pub simulate: bool,
    pub scenarios: Option<ScenarioFilter>,
    /// Overrides the sign of `l1`.
    pub direction: Option<Sign>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            tol_feas: DEFAULT_TOL_FEAS,
            tol_arrive: DEFAULT_TOL_ARRIVE,
            dt: None,
            t_end: None,
            simulate: false,
            scenarios: None,
            direction: None,
        }
    }
}

impl PipelineOptions {
    fn check(&self) -> Result<(), PipelineError> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(PipelineError::Options(format!("{name} must be positive, got {x}")))
            }
        };
        positive("--tol-feas", self.tol_feas)?;
        positive("--tol-arrive", self.tol_arrive)?;
        if let Some(dt) = self.dt {
            positive("--dt", dt)?;
        }
        if let Some(t) = self.t_end {
            positive("--t-end", t)?;
        }
        Ok(())
    }

    fn selects(&self, number: usize) -> bool {
        self.scenarios.as_ref().map_or(true, |f| f.contains(number))
    }
}

/// Per-scenario results; failures are kept as messages so one bad scenario
/// does not stop the others.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub evaluation: Result<ScenarioEvaluation, String>,
    /// `None` before the certify stage.
    pub eps0: Option<Result<f64, String>>,
    pub sigma: Vec<(Vec<SignedIndex>, Result<f64, String>)>,
    pub certificate: Option<Result<Certificate, String>>,
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub scenario: usize,
    pub y0: DVector<f64>,
    pub tau_d: Option<f64>,
    pub eps: Option<f64>,
    pub trajectory: Trajectory,
    pub arrival: ArrivalVerdict,
    pub lyapunov: Option<LyapunovReport>,
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub stage: Stage,
    pub options: PipelineOptions,
    pub input: NetworkInput,
    pub network: ValidatedNetwork,
    pub process: Option<SweepingProcess>,
    pub direction: Option<Sign>,
    /// Why no scenarios were enumerated, if so.
    pub enumeration_note: Option<String>,
    pub scenarios: Vec<Scenario>,
    /// Outcomes of the scenarios passing the filter, in scenario order.
    pub outcomes: Vec<ScenarioOutcome>,
    pub simulations: Vec<SimulationOutcome>,
}

impl Analysis {
    pub fn certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.outcomes
            .iter()
            .filter_map(|o| o.certificate.as_ref().and_then(|c| c.as_ref().ok()))
    }

    pub fn has_quantitative_certificate(&self) -> bool {
        self.certificates().any(Certificate::is_quantitative)
    }
}

/// Run up to and including `stage`.
pub fn run_pipeline(
    input: &NetworkInput,
    stage: Stage,
    options: &PipelineOptions,
    pool: &ThreadPool,
) -> Result<Analysis, PipelineError> {
    options.check()?;
    let network = validate_network(input.to_spec()?)?;
    let mut analysis = Analysis {
        stage,
        options: options.clone(),
        input: input.clone(),
        network,
        process: None,
        direction: None,
        enumeration_note: None,
        scenarios: Vec::new(),
        outcomes: Vec::new(),
        simulations: Vec::new(),
    };
    if stage == Stage::Validate {
        return Ok(analysis);
    }
    let proc = build_process(&analysis.network)?;
    analysis.process = Some(proc.clone());
    if stage == Stage::Construct {
        return Ok(analysis);
    }

    let direction = match options.direction {
        Some(s) => Ok(s),
        None => loading_direction(&proc),
    };
    match direction.and_then(|dir| Ok((dir, enumerate_scenarios(&proc, dir, options.tol_feas)?))) {
        Ok((dir, scenarios)) => {
            analysis.direction = Some(dir);
            analysis.scenarios = scenarios;
        }
        Err(e @ (FacetError::NoCandidates { .. } | FacetError::ZeroLoadingRate)) => {
            analysis.direction = options.direction;
            analysis.enumeration_note = Some(e.to_string());
            return Ok(analysis);
        }
        Err(e) => return Err(e.into()),
    }

    let certify = stage >= Stage::Certify;
    let selected: Vec<&Scenario> = analysis.scenarios.iter().filter(|s| options.selects(s.number)).collect();
    analysis.outcomes = pool.install(|| {
        selected
            .par_iter()
            .map(|s| scenario_outcome(&proc, s, options.tol_feas, certify))
            .collect()
    });

    let run_sims = stage == Stage::Simulate || (stage == Stage::Report && options.simulate);
    if run_sims {
        let jobs: Vec<(&ScenarioOutcome, Option<&Certificate>)> = analysis
            .outcomes
            .iter()
            .filter_map(|o| {
                let cert = o.certificate.as_ref().and_then(|c| c.as_ref().ok()).filter(|c| c.tau_d.is_some());
                match (cert, &o.evaluation) {
                    (Some(c), Ok(_)) => Some((o, Some(c))),
                    (None, Ok(_)) if options.t_end.is_some() && stage == Stage::Simulate => Some((o, None)),
                    _ => None,
                }
            })
            .collect();
        let y0 = DVector::zeros(proc.springs());
        analysis.simulations = pool.install(|| {
            jobs.par_iter()
                .map(|(o, cert)| simulate_outcome(&proc, o, *cert, &y0, options))
                .collect::<Result<Vec<_>, _>>()
        })?;
    }
    Ok(analysis)
}

fn scenario_outcome(proc: &SweepingProcess, scenario: &Scenario, tol_feas: f64, certify: bool) -> ScenarioOutcome {
    let evaluation = evaluate_scenario(proc, scenario, tol_feas).map_err(|e| e.to_string());
    let mut outcome = ScenarioOutcome {
        scenario: scenario.clone(),
        evaluation,
        eps0: None,
        sigma: Vec::new(),
        certificate: None,
    };
    if !certify {
        return outcome;
    }
    let i0 = &scenario.i0.members;
    outcome.eps0 = Some(compute_eps0(proc, i0).map_err(|e| e.to_string()));
    if let Some(flips) = &scenario.flips {
        outcome.sigma = flips
            .families
            .iter()
            .map(|ii| {
                let sigma = compute_li(proc, i0, ii)
                    .and_then(|li| compute_sigma(proc, &li))
                    .map_err(|e| e.to_string());
                (ii.clone(), sigma)
            })
            .collect();
    }
    outcome.certificate = outcome.evaluation.as_ref().ok().map(|eval| {
        assemble_certificate(proc, eval, &CertificateOptions::default()).map_err(|e| e.to_string())
    });
    outcome
}

/// Simulate from `y0` towards the scenario's facet and check arrival at
/// `τ_d` (or at the horizon when there is no certificate).
pub fn simulate_outcome(
    proc: &SweepingProcess,
    outcome: &ScenarioOutcome,
    cert: Option<&Certificate>,
    y0: &DVector<f64>,
    options: &PipelineOptions,
) -> Result<SimulationOutcome, PipelineError> {
    let eval = outcome
        .evaluation
        .as_ref()
        .map_err(|e| PipelineError::Options(format!("scenario {}: {e}", outcome.scenario.number)))?;
    let target = TargetFacet::from_evaluation(eval);
    let diameter = compute_diameter_bound(proc);
    let dt = options.dt.unwrap_or_else(|| default_dt(proc, diameter));
    let tau_d = cert.and_then(|c| c.tau_d);
    let t_end = options
        .t_end
        .or(tau_d)
        .ok_or_else(|| PipelineError::Options(String::from("no horizon: pass --t-end")))?;
    let sim_opts = SimulationOptions {
        tol_arrive: options.tol_arrive,
        ..SimulationOptions::new(dt, t_end)
    };
    let trajectory = simulate(proc, y0, Some(&target), &sim_opts)?;
    let check_at = tau_d.unwrap_or(t_end);
    let arrival = arrival_check(proc, &trajectory, &target, check_at, options.tol_arrive, &sim_opts.qp)?;
    let eps = cert.and_then(|c| c.eps);
    let lyapunov = eps.map(|e| lyapunov_monitor(&trajectory, e, default_slack(proc, dt), LYAPUNOV_FLOOR));
    Ok(SimulationOutcome {
        scenario: outcome.scenario.number,
        y0: y0.clone(),
        tau_d,
        eps,
        trajectory,
        arrival,
        lyapunov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_parsing() {
        let f: ScenarioFilter = "1, 4-6,8".parse().unwrap();
        assert!(f.contains(1) && f.contains(5) && f.contains(8));
        assert!(!f.contains(2) && !f.contains(7));
        assert!("0".parse::<ScenarioFilter>().is_err());
        assert!("5-3".parse::<ScenarioFilter>().is_err());
        assert!("x".parse::<ScenarioFilter>().is_err());
    }

    #[test]
    fn stages_are_ordered() {
        assert!(Stage::Validate < Stage::Construct && Stage::Certify < Stage::Report);
    }
}
