//! Command-line parsing and the subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gathering::adversary::{replay_check, ScenarioScript, ScriptError};
use gathering::algorithms::AlgorithmId;
use gathering::analysis::{check_trace, CheckOutcome, InvariantReport};
use gathering::engine::{gathering_status, Execution, GatheringStatus, SchedulerMode, StopReason};
use gathering::frames::CompassMode;
use gathering::geometry::{parse_angle, AngleExpr, Point};
use gathering::trace::{read_trace, write_trace};
use thiserror::Error;

use crate::plot::render_svg;
use crate::runspec::{AdversaryChoice, RunSpec, SpecError, SweepSpec};
use crate::sweep::{run_execution, run_sweep};

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PROPERTY_FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONTRACT: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("engine contract violated: {0}")]
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Contract(_) => exit::CONTRACT,
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Engine(inner) => CliError::Contract(inner.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ScriptError> for CliError {
    fn from(e: ScriptError) -> Self {
        match e {
            ScriptError::Engine(inner) => CliError::Contract(inner.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gather", version, about = "Two-robot gathering simulator with disoriented compasses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one execution, write its trace and check every invariant.
    Simulate(SimulateArgs),
    /// Run a scripted scenario file.
    Scenario(ScenarioArgs),
    /// Run trials over a grid of cells and tabulate gathering rates.
    Sweep(SweepArgs),
    /// Replay a trace bit for bit and re-check its invariants.
    Verify(VerifyArgs),
    /// Draw a trace's trajectories as SVG.
    Plot(PlotArgs),
}

fn parse_algorithm(s: &str) -> Result<AlgorithmId, String> {
    s.to_ascii_uppercase().parse().map_err(|e: gathering::algorithms::AlgorithmError| e.to_string())
}

fn parse_scheduler(s: &str) -> Result<SchedulerMode, String> {
    match s {
        "semi" | "semi-synchronous" | "ssync" => Ok(SchedulerMode::SemiSynchronous),
        "async" | "asynchronous" => Ok(SchedulerMode::Asynchronous),
        _ => Err(format!("unknown scheduler {s:?} (semi-synchronous or asynchronous)")),
    }
}

fn parse_compass(s: &str) -> Result<CompassMode, String> {
    match s {
        "static" => Ok(CompassMode::Static),
        "dynamic" => Ok(CompassMode::Dynamic),
        _ => Err(format!("unknown compass mode {s:?} (static or dynamic)")),
    }
}

fn parse_adversary(s: &str) -> Result<AdversaryChoice, String> {
    match s {
        "random" => Ok(AdversaryChoice::Random),
        "greedy" => Ok(AdversaryChoice::Greedy),
        "mirror" => Ok(AdversaryChoice::Mirror),
        "search" => Ok(AdversaryChoice::Search),
        _ => Err(format!("unknown adversary {s:?} (random, greedy, mirror or search)")),
    }
}

fn parse_angle_arg(s: &str) -> Result<AngleExpr, String> {
    parse_angle(s).map(AngleExpr)
}

fn parse_initial(s: &str) -> Result<[Point; 2], String> {
    let v: Vec<f64> =
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect::<Result<_, _>>()?;
    match v.as_slice() {
        &[x0, y0, x1, y1] => Ok([Point::new(x0, y0), Point::new(x1, y1)]),
        _ => Err("expected four comma-separated numbers x0,y0,x1,y1".into()),
    }
}

/// Flags overriding run parameters; each wins over the config file.
#[derive(Debug, Default, Args)]
pub struct RunOverrides {
    /// SS, SD or AD.
    #[arg(long, value_parser = parse_algorithm)]
    pub algorithm: Option<AlgorithmId>,
    /// Algorithm parameter, e.g. 0.3, pi/6 or 0.49pi.
    #[arg(long, value_parser = parse_angle_arg, allow_hyphen_values = true)]
    pub phi: Option<AngleExpr>,
    /// Permit φ beyond the algorithm's validity range.
    #[arg(long)]
    pub allow_out_of_range: bool,
    /// Use the variant that terminates instead of reporting gathered.
    #[arg(long)]
    pub terminate_variant: bool,
    #[arg(long, value_parser = parse_scheduler)]
    pub scheduler: Option<SchedulerMode>,
    #[arg(long, value_parser = parse_compass)]
    pub compass: Option<CompassMode>,
    /// Compass deviation bound (defaults to φ).
    #[arg(long, value_parser = parse_angle_arg)]
    pub compass_bound: Option<AngleExpr>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Fairness window k.
    #[arg(long, short = 'k')]
    pub fairness_bound: Option<u64>,
    #[arg(long)]
    pub max_cycle_ticks: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub post_gather_ticks: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_initial_distance: Option<f64>,
    /// random, greedy, mirror or search.
    #[arg(long, value_parser = parse_adversary)]
    pub adversary: Option<AdversaryChoice>,
    #[arg(long)]
    pub search_budget: Option<usize>,
    /// Fixed start as x0,y0,x1,y1.
    #[arg(long, value_parser = parse_initial, allow_hyphen_values = true)]
    pub initial: Option<[Point; 2]>,
}

impl RunOverrides {
    pub fn apply(&self, spec: &mut RunSpec) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { spec.$f = v; })*};
        }
        set!(
            algorithm,
            phi,
            scheduler,
            compass,
            delta,
            fairness_bound,
            max_cycle_ticks,
            horizon,
            post_gather_ticks,
            trials,
            seed,
            max_initial_distance,
            adversary,
            search_budget
        );
        if self.compass_bound.is_some() {
            spec.compass_bound = self.compass_bound;
        }
        if self.initial.is_some() {
            spec.initial = self.initial;
        }
        spec.allow_out_of_range |= self.allow_out_of_range;
        spec.terminate_variant |= self.terminate_variant;
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML run specification.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: RunOverrides,
    /// Where to write the trace.
    #[arg(long, default_value = "trace.jsonl")]
    pub trace: PathBuf,
    /// Where to write the invariant report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario script (TOML).
    pub script: PathBuf,
    #[arg(long, default_value = "trace.jsonl")]
    pub trace: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML sweep specification with [[cell]] rows.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// φ values for a single row built from the flags, e.g. "0,pi/6,pi/3".
    #[arg(long, value_delimiter = ',', value_parser = parse_angle_arg)]
    pub phis: Vec<AngleExpr>,
    #[command(flatten)]
    pub overrides: RunOverrides,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Exit with status 1 if any cell fails to gather or fails a check.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub trace: PathBuf,
    /// Where to write the invariant report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub trace: PathBuf,
    #[arg(long, short = 'o', default_value = "trace.svg")]
    pub out: PathBuf,
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn save_trace(e: &Execution, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_trace(e, &mut w).map_err(|err| io_error(path, err))?;
    w.flush().map_err(|err| io_error(path, err))
}

pub fn load_trace(path: &Path) -> Result<Execution, CliError> {
    let f = File::open(path).map_err(|e| io_error(path, e))?;
    read_trace(BufReader::new(f)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn save_report(report: &InvariantReport, path: &Option<PathBuf>) -> Result<(), CliError> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(report).expect("reports serialize");
        write_text(p, &(text + "\n"))?;
    }
    Ok(())
}

fn print_report(report: &InvariantReport) {
    for c in &report.checks {
        match &c.outcome {
            CheckOutcome::Pass => say!("  {:<16} pass", c.id),
            CheckOutcome::Fail { tick, detail } => say!("  {:<16} FAIL at tick {tick}: {detail}", c.id),
            CheckOutcome::NotApplicable { reason } => say!("  {:<16} n/a ({reason})", c.id),
        }
    }
}

fn describe_status(e: &Execution) -> String {
    let last = e.configs.last().expect("executions hold C(0)");
    let status = match gathering_status(e) {
        GatheringStatus::Gathered(t) => format!("gathered at tick {t}"),
        GatheringStatus::Stuck { tick, terminated } => {
            format!("stuck from tick {tick} (r{terminated} terminated)")
        }
        GatheringStatus::PseudoGathered(ticks) => {
            format!("not gathered; pseudo-gathered at {} tick(s), first {}", ticks.len(), ticks[0])
        }
        GatheringStatus::Inconclusive => "not gathered within the horizon".to_string(),
    };
    format!("{status}; final configuration ({}, {})", last.r0, last.r1)
}

pub fn simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let mut spec = match &args.config {
        Some(p) => RunSpec::load(p)?,
        None => RunSpec::default(),
    };
    args.overrides.apply(&mut spec);
    spec.validate()?;
    let alg = spec.algorithm_spec()?;
    let e = run_execution(&spec, spec.seed)?;
    save_trace(&e, &args.trace)?;
    let report = check_trace(&alg, &e);
    save_report(&report, &args.report)?;
    say!("{}", describe_status(&e));
    print_report(&report);
    let gathered = matches!(e.stop, StopReason::Gathered(_));
    Ok(if gathered && report.all_passed() { exit::OK } else { exit::PROPERTY_FAILURE })
}

pub fn scenario(args: &ScenarioArgs) -> Result<i32, CliError> {
    let script = ScenarioScript::load(&args.script)?;
    let e = script.run()?;
    save_trace(&e, &args.trace)?;
    let report = check_trace(&e.header.algorithm, &e);
    save_report(&report, &args.report)?;
    if !script.name.is_empty() {
        say!("scenario {}", script.name);
    }
    say!("{}", describe_status(&e));
    print_report(&report);
    Ok(if report.all_passed() { exit::OK } else { exit::PROPERTY_FAILURE })
}

pub fn sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let mut sweep = match &args.config {
        Some(p) => SweepSpec::load(p)?,
        None => SweepSpec::default(),
    };
    args.overrides.apply(&mut sweep.base);
    if !args.phis.is_empty() {
        sweep.cells.push(crate::runspec::CellSpec {
            algorithm: sweep.base.algorithm,
            scheduler: sweep.base.scheduler,
            compass: sweep.base.compass,
            phis: args.phis.clone(),
            adversary: None,
            allow_out_of_range: sweep.base.allow_out_of_range,
            trials: None,
        });
    }
    let cells = sweep.expand();
    for c in &cells {
        c.validate()?;
    }
    let result = run_sweep(&cells, sweep.base.seed);
    if let Some(p) = &args.csv {
        let w = create(p)?;
        result.write_csv(w).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = &args.json {
        write_text(p, &(serde_json::to_string_pretty(&result).expect("results serialize") + "\n"))?;
    }
    let _ = write!(std::io::stdout().lock(), "{}", result.summary());
    let clean = result.cells.iter().all(|c| c.clean());
    Ok(if args.strict && !clean { exit::PROPERTY_FAILURE } else { exit::OK })
}

pub fn verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let e = load_trace(&args.trace)?;
    let replay_ok = match replay_check(&e) {
        Ok(_) => {
            say!("replay: bit-exact");
            true
        }
        Err(m) => {
            say!("replay: MISMATCH: {m}");
            false
        }
    };
    let report = check_trace(&e.header.algorithm, &e);
    save_report(&report, &args.report)?;
    say!("{}", describe_status(&e));
    print_report(&report);
    Ok(if replay_ok && report.all_passed() { exit::OK } else { exit::PROPERTY_FAILURE })
}

pub fn plot(args: &PlotArgs) -> Result<i32, CliError> {
    let e = load_trace(&args.trace)?;
    write_text(&args.out, &render_svg(&e))?;
    say!("wrote {}", args.out.display());
    Ok(exit::OK)
}

pub fn dispatch(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Scenario(a) => scenario(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
