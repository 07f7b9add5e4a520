use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sweepcert::pipeline::{run_pipeline, PipelineOptions, ScenarioFilter, Stage};
use sweepcert::report::{csv_name, stage_name, write_trajectory_csv, AnalysisReport, EXIT_ERROR};
use sweepcert::threads::pool_from_env;
use sweepcert::{NetworkInput, PipelineError};
use sweepcert_core::facets::{Sign, DEFAULT_TOL_FEAS};
use sweepcert_core::simulator::DEFAULT_TOL_ARRIVE;

/// Finite-time stability certificates for elastoplastic spring networks
/// under displacement-controlled loading.
#[derive(Parser)]
#[command(name = "sweepcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check dimensions, signs and the rank conditions
    Validate(Common),
    /// Build the sweeping process (V_basis, D⊥, W, barL, normals)
    Construct(Common),
    /// List the candidate scenarios with their vertices and feasibility
    Enumerate(Common),
    /// Compute eps0, sigma and the certificates
    Certify(Common),
    /// Simulate the certified scenarios and check arrival
    Simulate(Common),
    /// Full pipeline; add --simulate to include simulations
    Report(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Network document (see crates/cli/schema/network.schema.json)
    #[arg(long, short)]
    input: PathBuf,
    /// Relative tolerance of the strict feasibility inequalities
    #[arg(long, default_value_t = DEFAULT_TOL_FEAS)]
    tol_feas: f64,
    /// A-distance to the facet that counts as arrived
    #[arg(long, default_value_t = DEFAULT_TOL_ARRIVE)]
    tol_arrive: f64,
    /// Catching-up step; defaults to 1e-3 · diameter / ||c'||^A
    #[arg(long)]
    dt: Option<f64>,
    /// Simulation horizon; defaults to tau_d
    #[arg(long)]
    t_end: Option<f64>,
    /// Run simulations as part of `report`
    #[arg(long)]
    simulate: bool,
    /// Scenario numbers to evaluate, e.g. `8` or `1,4-6`
    #[arg(long)]
    scenario: Option<ScenarioFilter>,
    /// Loading direction, overriding the sign of l1
    #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
    direction: Option<Sign>,
    /// Write JSON, markdown and CSV files here instead of printing JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_direction(s: &str) -> Result<Sign, String> {
    match s {
        "+" | "plus" => Ok(Sign::Plus),
        "-" | "minus" => Ok(Sign::Minus),
        _ => Err(format!("expected + or -, got {s:?}")),
    }
}

impl Common {
    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            tol_feas: self.tol_feas,
            tol_arrive: self.tol_arrive,
            dt: self.dt,
            t_end: self.t_end,
            simulate: self.simulate,
            scenarios: self.scenario.clone(),
            direction: self.direction,
        }
    }
}

fn write(path: &Path, contents: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|e| PipelineError::Output(format!("{}: {e}", path.display())))
}

fn run(stage: Stage, args: &Common) -> Result<i32, PipelineError> {
    let input = NetworkInput::load(&args.input)?;
    let pool = pool_from_env()?;
    let analysis = run_pipeline(&input, stage, &args.options(), &pool)?;
    let report = AnalysisReport::from_analysis(&analysis);
    let json = report.to_json();
    match &args.out {
        None => {
            print!("{json}");
            if !analysis.simulations.is_empty() {
                eprintln!("note: pass --out DIR to write the trajectory CSV files");
            }
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| PipelineError::Output(format!("{}: {e}", dir.display())))?;
            let name = stage_name(stage);
            write(&dir.join(format!("{name}.json")), json.as_bytes())?;
            write(&dir.join(format!("{name}.md")), report.to_markdown().as_bytes())?;
            for sim in &analysis.simulations {
                let path = dir.join(csv_name(sim.scenario));
                let file = fs::File::create(&path)
                    .map_err(|e| PipelineError::Output(format!("{}: {e}", path.display())))?;
                write_trajectory_csv(std::io::BufWriter::new(file), &sim.trajectory)?;
            }
        }
    }
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let (stage, args) = match &cli.command {
        Command::Validate(a) => (Stage::Validate, a),
        Command::Construct(a) => (Stage::Construct, a),
        Command::Enumerate(a) => (Stage::Enumerate, a),
        Command::Certify(a) => (Stage::Certify, a),
        Command::Simulate(a) => (Stage::Simulate, a),
        Command::Report(a) => (Stage::Report, a),
    };
    let code = match run(stage, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
