//! `vdp`: command-line front end for the volterra-dp solver.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use volterra_dp::costmodel::{comparison_table, instrument_and_compare, CostParams, InstrumentReport};
use volterra_dp::discretize::{discretize, Grid, RampControl};
use volterra_dp::dp::{quantize, solve, ConstraintBand, ControlConstraint, SweepOptions, DEFAULT_MEMORY_BUDGET};
use volterra_dp::io::{write_control_csv, write_trajectory_csv};
use volterra_dp::oracle::{
    convergence_study, enumerate_min, necessity_spot_check, optimality_gap_study, save_study, EnumerateOptions,
    NecessityReport,
};
use volterra_dp::problem::{builtin, VolterraProblem};
use volterra_dp::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_MISMATCH: u8 = 5;

const NECESSITY_HISTORIES: usize = 32;
const NECESSITY_TAILS: usize = 64;

#[derive(Parser)]
#[command(name = "vdp", version, about = "Optimal control of Volterra integral equations by history-indexed dynamic programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discrete problem and reconstruct the optimal control.
    Solve(SolveArgs),
    /// Compare the DP solution with brute-force enumeration and spot-check optimality.
    OracleCheck(OracleArgs),
    /// Discretization error of a ramp control against a reference solution.
    Converge(ConvergeArgs),
    /// Optimality gap of the interpolated DP controls as N grows.
    Gap(GapArgs),
    /// Operation-count predictions, optionally against an instrumented solve.
    Costmodel(CostArgs),
}

#[derive(Args)]
struct Common {
    /// Problem JSON file, or the name of a built-in problem.
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    /// Directory for the JSON summary and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "N")]
    steps: usize,
    #[arg(long = "Q", default_value_t = 3)]
    per_axis: usize,
    /// Restrict controls to the Lipschitz band.
    #[arg(long)]
    band: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    solve: SolveArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "N-list", value_parser = parse_list)]
    steps: StepsList,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "N-list", value_parser = parse_list)]
    steps: StepsList,
    #[arg(long = "Q", default_value_t = 3)]
    per_axis: usize,
}

#[derive(Args)]
struct CostArgs {
    /// Also instrument a solve of this problem at every N.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long = "N-list", value_parser = parse_list, default_value = "1,2,3,4,5,6,7,8,9,10")]
    steps: StepsList,
    /// Control counts M for the comparison table.
    #[arg(long = "M-list", value_parser = parse_list, default_value = "2,3,4")]
    controls: StepsList,
    /// Levels per axis for the instrumented solves.
    #[arg(long = "Q", default_value_t = 2)]
    per_axis: usize,
    #[arg(long, default_value_t = 1)]
    c_phi0: u64,
    #[arg(long, default_value_t = 1)]
    c_phi1: u64,
    #[arg(long, default_value_t = 1)]
    a: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct StepsList(Vec<usize>);

fn parse_list(s: &str) -> Result<StepsList, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err("list must be positive and strictly increasing".into());
    }
    Ok(StepsList(v))
}

enum Failure {
    Solver(Error, &'static str),
    Input(String),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e, "setup")
    }
}

trait At<T> {
    /// Tags a solver error with the phase it came from.
    fn at(self, phase: &'static str) -> Result<T, Failure>;
}

impl<T> At<T> for volterra_dp::Result<T> {
    fn at(self, phase: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure::Solver(e, phase))
    }
}

type Outcome = Result<(), Failure>;

fn load_problem(spec: &str) -> Result<VolterraProblem, Failure> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok(VolterraProblem::from_path(path)?);
    }
    builtin::by_name(spec).ok_or_else(|| Failure::Input(format!("no such file or built-in problem: {spec}")))
}

fn sweep_options(workers: u32) -> Result<SweepOptions, Failure> {
    let memory_budget = match std::env::var("VDP_MEMORY_BUDGET") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|e| Failure::Input(format!("VDP_MEMORY_BUDGET={v:?}: {e}")))?,
        Err(std::env::VarError::NotPresent) => DEFAULT_MEMORY_BUDGET,
        Err(e) => return Err(Failure::Input(format!("VDP_MEMORY_BUDGET: {e}"))),
    };
    Ok(SweepOptions {
        workers: workers as usize,
        memory_budget,
    })
}

fn prepare_out(out: &Option<PathBuf>) -> Result<Option<&Path>, Failure> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            Ok(Some(dir))
        }
        None => Ok(None),
    }
}

/// Prints the summary and, with an output directory, writes `summary.json`.
fn emit<T: Serialize>(summary: &T, out: Option<&Path>) -> Outcome {
    let text = serde_json::to_string_pretty(summary).map_err(Error::from).at("output")? + "\n";
    if let Some(dir) = out {
        std::fs::write(dir.join("summary.json"), &text).map_err(Error::from).at("output")?;
    }
    print!("{text}");
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Outcome {
    let p = load_problem(&args.common.problem)?;
    let opts = sweep_options(args.common.workers)?;
    let out = prepare_out(&args.common.out)?;
    let report = solve(&p, args.steps, args.per_axis, args.band, &opts).at("sweep")?;
    for w in &report.warnings {
        eprintln!("vdp: warning: {w}");
    }
    if let Some(dir) = out {
        let grid = Grid::new(p.horizon(), args.steps)?;
        let file = |name: &str| File::create(dir.join(name)).map_err(Error::from).at("output");
        write_control_csv(file("control.csv")?, &report.discrete_control, &grid).at("output")?;
        write_trajectory_csv(file("trajectory.csv")?, &report.discrete_trajectory, &grid).at("output")?;
    }
    emit(&report, out)
}

#[derive(Serialize)]
struct OracleSummary {
    #[serde(rename = "N")]
    steps: usize,
    #[serde(rename = "Q")]
    per_axis: usize,
    band: bool,
    dp_value: f64,
    oracle_value: f64,
    #[serde(rename = "dp_value == oracle_value")]
    values_equal: bool,
    dp_indices: Vec<usize>,
    oracle_indices: Vec<usize>,
    indices_equal: bool,
    reconstructed_cost: f64,
    necessity: NecessityReport,
    passed: bool,
}

fn run_oracle(args: &OracleArgs) -> Outcome {
    let s = &args.solve;
    let p = load_problem(&s.common.problem)?;
    let opts = sweep_options(s.common.workers)?;
    let out = prepare_out(&s.common.out)?;
    let dp = discretize(&p, s.steps)?;
    let lattice = quantize(p.control_box(), s.per_axis)?;
    let band = ConstraintBand::new(p.lipschitz_budget(), dp.step());
    let constraint: Option<&dyn ControlConstraint> = if s.band { Some(&band) } else { None };

    let report = solve(&p, s.steps, s.per_axis, s.band, &opts).at("sweep")?;
    let enumeration = enumerate_min(&dp, &lattice, constraint, &EnumerateOptions::with_workers(opts.workers)).at("enumerate")?;
    let necessity = necessity_spot_check(&dp, &lattice, constraint, &report.table, NECESSITY_HISTORIES, NECESSITY_TAILS, args.seed).at("necessity")?;

    let values_equal = report.value == enumeration.value;
    let indices_equal = report.control_indices == enumeration.indices;
    let passed = values_equal && indices_equal && necessity.passed();
    let summary = OracleSummary {
        steps: s.steps,
        per_axis: s.per_axis,
        band: s.band,
        dp_value: report.value,
        oracle_value: enumeration.value,
        values_equal,
        dp_indices: report.control_indices.clone(),
        oracle_indices: enumeration.indices.clone(),
        indices_equal,
        reconstructed_cost: report.cost,
        necessity,
        passed,
    };
    emit(&summary, out)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!(
            "dp value {} vs enumeration {}, indices equal: {indices_equal}, necessity passed: {}",
            summary.dp_value,
            summary.oracle_value,
            summary.necessity.passed()
        )))
    }
}

fn run_converge(args: &ConvergeArgs) -> Outcome {
    let p = load_problem(&args.common.problem)?;
    let out = prepare_out(&args.common.out)?;
    let u = RampControl::from_lower_corner(p.control_box(), p.lipschitz_budget())?;
    let study = convergence_study(&p, &u, &args.steps.0, args.common.workers as usize).at("study")?;
    if let Some(dir) = out {
        save_study(dir, "convergence", &study.rows, &study).at("output")?;
    }
    emit(&study, out)
}

fn run_gap(args: &GapArgs) -> Outcome {
    let p = load_problem(&args.common.problem)?;
    let opts = sweep_options(args.common.workers)?;
    let out = prepare_out(&args.common.out)?;
    let study = optimality_gap_study(&p, args.per_axis, &args.steps.0, &opts).at("study")?;
    if let Some(dir) = out {
        save_study(dir, "gap", &study.rows, &study).at("output")?;
    }
    emit(&study, out)
}

#[derive(Serialize)]
struct CostSummary {
    comparison: volterra_dp::costmodel::ComparisonTable,
    instrumented: Vec<InstrumentReport>,
}

fn run_costmodel(args: &CostArgs) -> Outcome {
    let out = prepare_out(&args.out)?;
    let coeffs = CostParams {
        steps: 0,
        controls: 0,
        c_phi0: args.c_phi0,
        c_phi1: args.c_phi1,
        a: args.a,
    };
    let steps = args.steps.0.iter().map(|&n| n as u64);
    let controls: Vec<u64> = args.controls.0.iter().map(|&m| m as u64).collect();
    let comparison = comparison_table(steps, &controls, &coeffs).at("predict")?;
    let mut instrumented = Vec::new();
    if let Some(name) = &args.problem {
        let p = load_problem(name)?;
        let opts = sweep_options(args.workers)?;
        for &n in &args.steps.0 {
            instrumented.push(instrument_and_compare(&p, n, args.per_axis, &opts).at("instrument")?);
        }
    }
    if let Some(dir) = out {
        comparison.save(dir, "costmodel_comparison").at("output")?;
    }
    let summary = CostSummary { comparison, instrumented };
    emit(&summary, out)?;
    let broken: Vec<String> = summary
        .instrumented
        .iter()
        .filter(|r| !r.accounting_matches())
        .map(|r| format!("N={} M={}", r.steps, r.controls))
        .collect();
    if broken.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("measured counts differ from the accounting at {}", broken.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, result) = match &cli.command {
        Command::Solve(a) => ("solve", run_solve(a)),
        Command::OracleCheck(a) => ("oracle-check", run_oracle(a)),
        Command::Converge(a) => ("converge", run_converge(a)),
        Command::Gap(a) => ("gap", run_gap(a)),
        Command::Costmodel(a) => ("costmodel", run_costmodel(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("vdp {name}: module=cli stage=setup: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("vdp {name}: module=oracle stage=compare: {msg}");
            ExitCode::from(EXIT_MISMATCH)
        }
        Err(Failure::Solver(e, phase)) => {
            let stage = e.stage().map_or_else(|| phase.to_string(), |s| format!("{phase}/{s}"));
            eprintln!("vdp {name}: module={} stage={stage}: {e}", e.module());
            ExitCode::from(match e {
                Error::Capacity { .. } => EXIT_CAPACITY,
                Error::Numerical { .. } => EXIT_NUMERICAL,
                Error::Internal { .. } => EXIT_MISMATCH,
                _ => EXIT_INPUT,
            })
        }
    }
}
