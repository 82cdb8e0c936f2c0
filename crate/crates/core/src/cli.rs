//! The `ctxcost` command line.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 config error, 3 input
//! validation error, 4 summarizer transport error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{paired_bootstrap, read_metric_csv, AnalysisError, BootstrapResult, PairedSamples};
use crate::config::{
    ConfigError, ConfigFile, Overrides, RunConfig, StrategyKind, StrategyOverrides, DEFAULT_BOOTSTRAP_REPLICATES,
    DEFAULT_LEVEL,
};
use crate::cost::{ledger_report, CostError, CostLedger};
use crate::run::{config_fingerprint, write_curve_csv, CurvePoint, RunCheckpoint, RunDriver, RunError};
use crate::simulator::{simulate_run, sweep, write_sweep_csv, SimError, SimOptions, SweepRow};
use crate::strategy::{StrategyConfig, StrategyError, SummaryEvent};
use crate::summarizer::{PromptTemplate, SummarizerError};
use crate::trajectory::{load_trajectory, TrajectoryError};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_TRANSPORT: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ctxcost", version, about = "Evaluate agent context-management strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a strategy over a simulated trajectory.
    Simulate(RunArgs),
    /// Step a strategy over a recorded trajectory log.
    Replay(ReplayArgs),
    /// Paired bootstrap comparison of two per-instance metric CSVs.
    Compare(CompareArgs),
    /// Simulate every config of a grid.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyKind>,
    /// Masking window M (comma-separated list for sweeps).
    #[arg(long, value_delimiter = ',')]
    pub window: Vec<usize>,
    /// Turns folded per summary, N.
    #[arg(long, value_delimiter = ',')]
    pub accum: Vec<usize>,
    /// Raw tail turns kept after a summary, M.
    #[arg(long, value_delimiter = ',')]
    pub tail: Vec<usize>,
    /// Hybrid masking window W.
    #[arg(long = "mask-window", value_delimiter = ',')]
    pub mask_window: Vec<usize>,
    #[arg(long)]
    pub turns: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pricing file (JSON map of model name to rates).
    #[arg(long)]
    pub pricing: Option<PathBuf>,
    /// Pricing model name.
    #[arg(long)]
    pub model: Option<String>,
    /// Token statistics: a JSON stats file, a trajectory log, or a directory of logs.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Summary length: simulated summary size and extractive budget.
    #[arg(long = "summary-tokens")]
    pub summary_tokens: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Trajectory log to replay.
    pub log: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    /// Stop before this turn and write `checkpoint.json`.
    #[arg(long = "checkpoint-at")]
    pub checkpoint_at: Option<usize>,
    /// Continue from a checkpoint written by `--checkpoint-at`.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Metric CSV (instance_id,metric) for strategy A.
    pub a: PathBuf,
    /// Metric CSV for strategy B (the baseline).
    pub b: PathBuf,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for `report.json`; the report is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Transport(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Transport(_) => EXIT_TRANSPORT,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        match e {
            TrajectoryError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CostError> for CliError {
    fn from(e: CostError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Strategy(StrategyError::Summarizer { turn, source: SummarizerError::Transport { .. } }) => {
                CliError::Transport(format!("turn {turn}: {e}"))
            }
            RunError::Strategy(StrategyError::Config(m)) => CliError::Config(ConfigError::new("strategy", m)),
            RunError::Io(e) => CliError::Io(e.to_string()),
            RunError::Cost(e) => e.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Run(r) => r.into(),
            SimError::EmptyGrid => CliError::Config(ConfigError::new("grid", "is empty")),
            SimError::NoTurns => CliError::Config(ConfigError::new("turns", "must be >= 1")),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Replay(args) => cmd_replay(&args),
        Command::Compare(args) => cmd_compare(&args).map(|report| print!("{report}")),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

fn single(flag: &str, values: &[usize]) -> Result<Option<usize>, ConfigError> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => Err(ConfigError::new(flag, "takes a single value outside `sweep`")),
    }
}

fn load_config_file(path: Option<&Path>) -> Result<ConfigFile, ConfigError> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn overrides(args: &RunArgs) -> Result<Overrides, ConfigError> {
    Ok(Overrides {
        strategy: StrategyOverrides {
            kind: args.strategy,
            window: single("window", &args.window)?,
            accum: single("accum", &args.accum)?,
            tail: single("tail", &args.tail)?,
            mask_window: single("mask-window", &args.mask_window)?,
        },
        pricing: args.pricing.clone(),
        model: args.model.clone(),
        stats: args.stats.clone(),
        turns: args.turns,
        seed: args.seed,
        summary_tokens: args.summary_tokens,
        out: args.out.clone(),
    })
}

fn resolve(args: &RunArgs) -> Result<(ConfigFile, RunConfig), CliError> {
    let file = load_config_file(args.config.as_deref())?;
    let cfg = RunConfig::resolve(&file, &overrides(args)?)?;
    Ok((file, cfg))
}

fn write_outputs(
    cfg: &RunConfig,
    points: &[CurvePoint],
    ledger: &CostLedger,
    report: &str,
) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)?;
    write_curve_csv(points, &cfg.strategy, fs::File::create(cfg.out.join("curves.csv"))?)?;
    ledger.write_csv(fs::File::create(cfg.out.join("ledger.csv"))?)?;
    fs::write(cfg.out.join("report.txt"), report)?;
    let resolved = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(cfg.out.join("config_resolved.json"), resolved + "\n")?;
    Ok(())
}

/// Plain `key: value` run report.
pub fn run_report(cfg: &StrategyConfig, points: &[CurvePoint], ledger: &CostLedger, events: &[SummaryEvent]) -> String {
    let totals = ledger_report(ledger);
    let max_context = points.iter().map(|p| p.context_tokens.0).max().unwrap_or(0);
    let mean_context = if points.is_empty() {
        0.0
    } else {
        points.iter().map(|p| p.context_tokens.0 as f64).sum::<f64>() / points.len() as f64
    };
    let mut s = String::new();
    let _ = writeln!(s, "strategy: {}", cfg.label());
    let _ = writeln!(s, "config_fingerprint: {}", config_fingerprint(cfg));
    let _ = writeln!(s, "turns: {}", points.len());
    let _ = writeln!(s, "grand_cost: {}", totals.grand);
    let _ = writeln!(s, "agent_cost: {}", totals.agent);
    let _ = writeln!(s, "summary_cost: {}", totals.summary);
    let _ = writeln!(s, "summary_proportion: {:.6}", totals.summary_proportion);
    let _ = writeln!(s, "input_tokens: {}", totals.input_tokens);
    let _ = writeln!(s, "output_tokens: {}", totals.output_tokens);
    let _ = writeln!(s, "max_context: {max_context}");
    let _ = writeln!(s, "mean_context: {mean_context:.3}");
    let _ = writeln!(s, "summary_events: {}", events.len());
    let turns: Vec<String> = events.iter().map(|e| e.at_turn.to_string()).collect();
    let _ = writeln!(s, "summary_turns: {}", turns.join(","));
    s
}

pub fn cmd_simulate(args: &RunArgs) -> Result<(), CliError> {
    let (_, cfg) = resolve(args)?;
    let opts = SimOptions { summary_tokens: cfg.summary_tokens, jitter: None };
    let run = simulate_run(&cfg.stats, &cfg.strategy, cfg.turn_limit, &cfg.pricing, &opts)?;
    let mut report = run_report(&cfg.strategy, &run.points, &run.ledger, &run.events);
    let (num, den) = cfg.stats.observation_share();
    let share = if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let _ = writeln!(report, "observation_share: {num}/{den} ({share:.6})");
    write_outputs(&cfg, &run.points, &run.ledger, &report)
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<(), CliError> {
    let (_, cfg) = resolve(&args.run)?;
    let traj = load_trajectory(&args.log)?;
    let summarizer = cfg.summarizer.build(PromptTemplate::summary_default());
    let mut driver = match &args.resume {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let ck: RunCheckpoint =
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            RunDriver::resume(&traj, cfg.strategy.clone(), cfg.pricing, summarizer.as_ref(), ck)?
        }
        None => RunDriver::new(&traj, cfg.strategy.clone(), cfg.pricing, summarizer.as_ref())?,
    };
    driver.run_until(args.checkpoint_at)?;
    let ck = driver.into_checkpoint();
    if !ck.points.is_empty() || traj.turns.is_empty() {
        let report = run_report(&cfg.strategy, &ck.points, &ck.ledger, &ck.state.events);
        write_outputs(&cfg, &ck.points, &ck.ledger, &report)?;
    }
    if args.checkpoint_at.is_some() {
        fs::create_dir_all(&cfg.out)?;
        let json = serde_json::to_string(&ck).expect("checkpoint serializes");
        fs::write(cfg.out.join("checkpoint.json"), json + "\n")?;
    }
    Ok(())
}

/// Structured comparison report.
pub fn format_bootstrap_report(r: &BootstrapResult) -> String {
    serde_json::to_string_pretty(r).expect("report serializes") + "\n"
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String, CliError> {
    let file = load_config_file(args.config.as_deref())?;
    let replicates = args.bootstrap.or(file.bootstrap).unwrap_or(DEFAULT_BOOTSTRAP_REPLICATES);
    let level = args.level.or(file.level).unwrap_or(DEFAULT_LEVEL);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    if replicates == 0 {
        return Err(ConfigError::new("bootstrap", "must be >= 1").into());
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ConfigError::new("level", "must lie in (0, 1)").into());
    }
    let a = read_metric_csv(&args.a)?;
    let b = read_metric_csv(&args.b)?;
    let samples = PairedSamples::from_maps(&a, &b)?;
    let result = paired_bootstrap(&samples, replicates, level, seed)?;
    let report = format_bootstrap_report(&result);
    if let Some(out) = args.out.as_ref().or(file.out.as_ref()) {
        fs::create_dir_all(out)?;
        fs::write(out.join("report.json"), &report)?;
    }
    Ok(report)
}

/// Cartesian product of the list-valued flags over the base strategy, or
/// the file's `grid` when no list flag is given.
pub fn sweep_grid(args: &RunArgs, file: &ConfigFile) -> Result<Vec<StrategyConfig>, CliError> {
    let list_flags = [&args.window, &args.accum, &args.tail, &args.mask_window];
    if args.strategy.is_none() && list_flags.iter().all(|v| v.is_empty()) {
        if let Some(grid) = &file.grid {
            if grid.is_empty() {
                return Err(ConfigError::new("grid", "is empty").into());
            }
            for cfg in grid {
                cfg.validate().map_err(|e| ConfigError::new("grid", e.to_string()))?;
            }
            return Ok(grid.clone());
        }
    }
    let base = file.strategy.clone().unwrap_or_else(StrategyConfig::raw);
    let opt = |v: &Vec<usize>| if v.is_empty() { vec![None] } else { v.iter().copied().map(Some).collect() };
    let mut grid = Vec::new();
    for window in opt(&args.window) {
        for accum in opt(&args.accum) {
            for tail in opt(&args.tail) {
                for mask_window in opt(&args.mask_window) {
                    let o = StrategyOverrides { kind: args.strategy, window, accum, tail, mask_window };
                    grid.push(o.apply(&base)?);
                }
            }
        }
    }
    Ok(grid)
}

pub fn sweep_rows(args: &RunArgs) -> Result<(RunConfig, Vec<SweepRow>), CliError> {
    let file = load_config_file(args.config.as_deref())?;
    let grid = sweep_grid(args, &file)?;
    let mut scalar = args.clone();
    for list in [&mut scalar.window, &mut scalar.accum, &mut scalar.tail, &mut scalar.mask_window] {
        list.clear();
    }
    let flags = overrides(&scalar)?;
    let cfg = RunConfig::resolve_with_strategy(&file, &flags, grid[0].clone())?;
    let opts = SimOptions { summary_tokens: cfg.summary_tokens, jitter: None };
    let rows = sweep(&grid, &cfg.stats, cfg.turn_limit, &cfg.pricing, &opts)?;
    Ok((cfg, rows))
}

pub fn cmd_sweep(args: &RunArgs) -> Result<(), CliError> {
    let (cfg, rows) = sweep_rows(args)?;
    fs::create_dir_all(&cfg.out)?;
    write_sweep_csv(&rows, fs::File::create(cfg.out.join("sweep.csv"))?)?;
    let grid: Vec<&StrategyConfig> = rows.iter().map(|r| &r.config).collect();
    let resolved = serde_json::json!({ "grid": grid, "run": cfg });
    fs::write(cfg.out.join("config_resolved.json"), serde_json::to_string_pretty(&resolved).expect("json") + "\n")?;
    Ok(())
}
