//! `splitplan` command-line front end.
//!
//! Exit codes: 0 on success, 2 for bad input, 3 when an internal invariant
//! fails.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::latency;
use crate::planner::{solve_lscra, PlanResult};
use crate::profile::{resnet18_profile, LayerProfile};
use crate::scenario::{Scenario, GHZ};
use crate::simulator::{simulate_training, write_trace_csv};
use crate::sweep::{client_grid, linspace, sweep_capacity, sweep_clients, write_sweep_csv};

pub const THREADS_ENV: &str = "SPLITPLAN_THREADS";

/// Relative tolerance between simulated and analytic makespans.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "splitplan", version, about = "Split-layer and server compute planner for U-shaped parallel split learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the best cut pair and server allocation for one scenario.
    Solve(SolveArgs),
    /// Sweep the server capacity with a fixed client pool.
    SweepCapacity(SweepCapacityArgs),
    /// Sweep the number of clients over nested client pools.
    SweepClients(SweepClientsArgs),
    /// Simulate training rounds and compare against the analytic model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Replace the scenario's profile.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Plan JSON destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCapacityArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10.0 * GHZ)]
    pub fs_min: f64,
    #[arg(long, default_value_t = 50.0 * GHZ)]
    pub fs_max: f64,
    #[arg(long, default_value_t = 9)]
    pub steps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Profile JSON; the bundled ResNet-18 profile when omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepClientsArgs {
    #[arg(long, default_value_t = 10)]
    pub n_min: usize,
    #[arg(long, default_value_t = 100)]
    pub n_max: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 50.0 * GHZ)]
    pub fs: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Plan JSON from `solve`; solved on the fly when omitted.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
    /// Trace CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            CliError::Internal(e.to_string())
        } else {
            CliError::Input(e)
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

/// Thread cap from `SPLITPLAN_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub fn main_with(cli: Cli) -> ExitCode {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let outcome = match builder.build() {
        Ok(pool) => pool.install(|| run(cli, &mut io::stdout().lock())),
        Err(e) => Err(CliError::Internal(e.to_string())),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("splitplan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a command, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args, stdout),
        Command::SweepCapacity(args) => cmd_sweep_capacity(&args, stdout),
        Command::SweepClients(args) => cmd_sweep_clients(&args, stdout),
        Command::Simulate(args) => cmd_simulate(&args, stdout),
    }
}

fn load_profile_or_default(path: Option<&Path>) -> Result<LayerProfile, Error> {
    match path {
        Some(p) => LayerProfile::load(p),
        None => Ok(resnet18_profile()),
    }
}

fn write_output(path: Option<&Path>, stdout: &mut dyn Write, body: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| Error::io(p, e)),
        None => stdout.write_all(body).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn console(stdout: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<(), Error> {
    writeln!(stdout, "{line}").map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(p) = &args.profile {
        scenario.profile = LayerProfile::load(p)?;
    }
    let plan = solve_lscra(&scenario)?;
    let json = serde_json::to_string_pretty(&plan).expect("plan serialization is infallible") + "\n";
    write_output(args.out.as_deref(), stdout, json.as_bytes())?;
    let summary = format!(
        "best cuts {} | round latency {:.6} s | {} clients | {} candidates",
        plan.best_cuts,
        plan.round_latency,
        scenario.n_clients(),
        plan.search_table.len()
    );
    if args.out.is_some() {
        console(stdout, format_args!("{summary}"))?;
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

pub fn cmd_sweep_capacity(args: &SweepCapacityArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.steps == 0 || args.n == 0 || args.fs_min.is_nan() || args.fs_min <= 0.0 || args.fs_max < args.fs_min {
        return Err(Error::InvariantViolation(
            "sweep needs n >= 1, steps >= 1 and 0 < fs_min <= fs_max".into(),
        )
        .into());
    }
    let profile = load_profile_or_default(args.profile.as_deref())?;
    let grid = linspace(args.fs_min, args.fs_max, args.steps);
    let rows = sweep_capacity(args.n, &grid, &profile, args.seed, args.trials)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, "fs_hz", &mut buf)?;
    write_output(args.out.as_deref(), stdout, &buf)?;
    Ok(())
}

pub fn cmd_sweep_clients(args: &SweepClientsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.steps == 0 || args.n_min == 0 || args.n_max < args.n_min || args.fs.is_nan() || args.fs <= 0.0 {
        return Err(Error::InvariantViolation(
            "sweep needs 1 <= n_min <= n_max, steps >= 1 and fs > 0".into(),
        )
        .into());
    }
    let profile = load_profile_or_default(args.profile.as_deref())?;
    let grid = client_grid(args.n_min, args.n_max, args.steps);
    let rows = sweep_clients(&grid, args.fs, &profile, args.seed, args.trials)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, "n", &mut buf)?;
    write_output(args.out.as_deref(), stdout, &buf)?;
    Ok(())
}

/// Loads a plan and checks it against the scenario it will drive.
pub fn load_plan(path: &Path, scenario: &Scenario) -> Result<PlanResult, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let plan: PlanResult = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    plan.best_cuts.validate(scenario.profile.layer_count())?;
    let shares = &plan.allocation.shares;
    if shares.len() != scenario.n_clients() {
        return Err(Error::AllocationLength {
            expected: scenario.n_clients(),
            got: shares.len(),
        });
    }
    if shares.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvariantViolation("plan shares must be finite and >= 0".into()));
    }
    let budget = scenario.server.capacity_hz;
    if shares.iter().sum::<f64>() > budget * (1.0 + 1e-9) {
        return Err(Error::InvariantViolation(format!("plan shares exceed server capacity {budget}")));
    }
    Ok(plan)
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scenario = Scenario::load(&args.scenario)?;
    let plan = match &args.plan {
        Some(p) => load_plan(p, &scenario)?,
        None => solve_lscra(&scenario)?,
    };
    let analytic = latency::round_latency(&scenario, plan.best_cuts, &plan.allocation.shares)?;
    let (makespans, traces) = simulate_training(&scenario, &plan, args.rounds)?;

    if let Some(out) = &args.out {
        let file = File::create(out).map_err(|e| Error::io(out, e))?;
        write_trace_csv(&traces, BufWriter::new(file))?;
    }
    let mut worst = 0.0_f64;
    for (round, m) in makespans.iter().enumerate() {
        let delta = (m - analytic).abs() / analytic;
        worst = worst.max(delta);
        console(
            stdout,
            format_args!("round {}: simulated {m} s, analytic {analytic} s, relative delta {delta:e}", round + 1),
        )?;
    }
    console(
        stdout,
        format_args!("total {} s over {} rounds", makespans.iter().sum::<f64>(), makespans.len()),
    )?;
    if worst > AGREEMENT_TOLERANCE {
        return Err(CliError::Internal(format!(
            "simulated makespan deviates from analytic latency by {worst:e}"
        )));
    }
    Ok(())
}
