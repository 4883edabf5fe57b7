//! `gopsim` — cost/performance modeling and simulation of GOP
//! transcoding on heterogeneous cloud VMs.

mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

/// CLI failure, split by exit code: 2 for usage/input problems, 1 for
/// internal errors.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }
}

pub fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Parser)]
#[command(name = "gopsim", version, about = "GOP transcoding cost/performance toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a benchmark trace: ratio histogram, threshold tables,
    /// per-operation means
    Analyze(AnalyzeArgs),
    /// Fit the transcoding-time regression on a trace
    Fit(FitArgs),
    /// Score VM types per task from an ETC matrix or a trace
    Suitability(SuitabilityArgs),
    /// Synthesize a workload and its ETC matrix
    Generate(GenerateArgs),
    /// Run scheduling replications on a workload + ETC matrix
    Simulate(SimulateArgs),
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Trace CSV path
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Baseline VM type for ratios (default gpu)
    #[arg(long)]
    baseline: Option<String>,
    /// Comma list of `lt:X` (ratio < X) / `le:X` (ratio <= X) tables
    /// (default lt:1.0,le:1.2)
    #[arg(long)]
    thresholds: Option<String>,
    /// Histogram bin width (default 0.1)
    #[arg(long)]
    bin_width: Option<f64>,
    /// Restrict the histogram to one operation
    #[arg(long)]
    operation: Option<String>,
    /// Restrict the histogram to one VM type
    #[arg(long)]
    vm_type: Option<String>,
    /// Also emit per-video operation means
    #[arg(long)]
    per_video: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitArgs {
    /// Trace CSV path
    #[arg(long)]
    trace: Option<PathBuf>,
    /// VM type whose times are fitted (default gpu)
    #[arg(long)]
    vm_type: Option<String>,
    /// Restrict to one operation
    #[arg(long)]
    operation: Option<String>,
    /// frame_count (default) or gop_size_mb
    #[arg(long)]
    predictor: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
pub struct SuitabilityArgs {
    /// ETC CSV input
    #[arg(long)]
    etc: Option<PathBuf>,
    /// Trace CSV input (rows built from fully measured keys)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Performance preference in (0,1) (default 0.4)
    #[arg(long)]
    perf_pref: Option<f64>,
    /// Gap tolerance in seconds, bypassing the preference mapping
    #[arg(long)]
    delta_th: Option<f64>,
    /// Derive the tolerance from a cost preference via the published
    /// form ln(c/(1-c))/alpha - beta; note it is negative for most c
    #[arg(long)]
    cost_pref: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// suitability (default) or naive
    #[arg(long)]
    method: Option<String>,
    /// Naive method time weight (default 0.5)
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Number of GOP tasks
    #[arg(long)]
    n: Option<usize>,
    /// Content mix, e.g. slow:0.4,fast:0.4,mixed:0.2 (default mixed:1.0)
    #[arg(long)]
    mix: Option<String>,
    /// Arrival window in seconds (default 60)
    #[arg(long)]
    window: Option<f64>,
    /// GOPs per synthesized video (default 1)
    #[arg(long)]
    gops_per_video: Option<usize>,
    /// Frames per second (default 30)
    #[arg(long)]
    fps: Option<f64>,
    /// uniform (default) or poisson
    #[arg(long)]
    arrival: Option<String>,
    /// Baseline regression coefficients `a,b,c`
    #[arg(long)]
    fit: Option<String>,
    /// frame_count (default) or gop_size_mb
    #[arg(long)]
    predictor: Option<String>,
    /// Lower clamp on predicted seconds (default 0.05)
    #[arg(long)]
    time_floor: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Workload CSV path
    #[arg(long)]
    workload: Option<PathBuf>,
    /// ETC CSV path
    #[arg(long)]
    etc: Option<PathBuf>,
    /// Cluster spec, e.g. gpu=2,cpu_opt=4,general=4
    #[arg(long)]
    cluster: Option<String>,
    /// suitability (default), naive, fastest_vm or random
    #[arg(long)]
    policy: Option<String>,
    /// Performance preference in (0,1) (default 0.4)
    #[arg(long)]
    perf_pref: Option<f64>,
    /// Gap tolerance in seconds, bypassing the preference mapping
    #[arg(long)]
    delta_th: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Naive policy time weight (default 0.5)
    #[arg(long)]
    k: Option<f64>,
    /// Replications (default 1)
    #[arg(long)]
    reps: Option<usize>,
    /// Startup allowance seconds, or `inf` (default 5)
    #[arg(long)]
    allowance: Option<String>,
    /// Billing quantum in seconds (default 3600)
    #[arg(long)]
    quantum: Option<f64>,
    /// Earliest-deadline window the scheduler scans (default 10)
    #[arg(long)]
    scheduler_window: Option<usize>,
    /// Lognormal sigma of scheduler-side time estimation noise (default 0)
    #[arg(long)]
    noise: Option<f64>,
    /// Redraw stream arrivals per replication
    #[arg(long)]
    regen_arrivals: bool,
    /// Write per-replication event logs
    #[arg(long)]
    emit_events: bool,
    /// Run replications on this many threads
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => commands::cmd_analyze(args),
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Suitability(args) => commands::cmd_suitability(args),
        Command::Generate(args) => commands::cmd_generate(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}
