use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<prospector::Error> for Failure {
    fn from(e: prospector::Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "prospector", version, about = "Fit and apply prospector heads for token-level attribution")]
pub struct Cli {
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a quantizer and kernel on a training directory.
    Fit(FitArgs),
    /// Write a prospect map for every datum of a directory.
    Attribute(AttributeArgs),
    /// Score prospect maps against ground-truth masks.
    Evaluate(EvaluateArgs),
    /// Run a resumable grid search, one ledger row per configuration.
    Sweep(SweepArgs),
    /// Rank a sweep ledger and report the selected configuration.
    Rank(RankArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Export a kernel or sprite as a semantic network.
    ExportViz(ExportVizArgs),
    /// Time attribution on chain graphs of growing size.
    BenchScaling(BenchArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Select hyperparameters by grid search before fitting.
    #[arg(long)]
    pub grid: bool,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    /// Directory holding quantizer.json and kernel.json.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Keep raw scores instead of min-max scaling them.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub maps: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated thresholds on scaled scores.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Discard an existing ledger instead of resuming it.
    #[arg(long)]
    pub fresh: bool,
    /// Recompute every stage for every configuration.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Ledger to rank; defaults to ledger.csv in the output directory.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SynthKind {
    Grid,
    Trigram,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "grid")]
    pub kind: SynthKind,
    /// Generator spec file (TOML, or JSON by extension).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Trigram spacing.
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    #[arg(long)]
    pub prevalence: Option<f64>,
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Store embeddings in binary sidecar files.
    #[arg(long)]
    pub sidecar: bool,
}

#[derive(Debug, Args)]
pub struct ExportVizArgs {
    #[arg(long, conflicts_with_all = ["sprite", "model"])]
    pub kernel: Option<PathBuf>,
    /// Datum file whose rollup counts to export; needs --model.
    #[arg(long, requires = "model")]
    pub sprite: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long = "K", default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, default_value_t = 200)]
    pub min_time_ms: u64,
}

/// Global settings after merging flags over the configuration file.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub output: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let workers = cli.workers.or(config.workers);
    if let Some(n) = workers {
        if n == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(format!("worker pool: {e}")))?;
    }
    let ctx = Context {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        output: cli
            .output
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("prospector-out")),
        config,
    };
    match cli.command {
        Command::Fit(args) => commands::fit(&ctx, &args),
        Command::Attribute(args) => commands::attribute(&ctx, &args),
        Command::Evaluate(args) => commands::evaluate(&ctx, &args),
        Command::Sweep(args) => commands::sweep(&ctx, &args),
        Command::Rank(args) => commands::rank(&ctx, &args),
        Command::Synth(args) => commands::synth(&ctx, &args),
        Command::ExportViz(args) => commands::export_viz(&ctx, &args),
        Command::BenchScaling(args) => commands::bench_scaling(&ctx, &args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli))
        .unwrap_or_else(|_| Err(Failure::Internal("internal error (panic)".into())));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
