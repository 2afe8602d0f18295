//! Experiment runner behind the `bnn-mcmc` binary.
//!
//! Every command reads an [`ExperimentConfig`] (directly or from the
//! `config.json` that `sample` stores in its run directory) and writes CSV or
//! JSON artifacts. Outputs depend only on the config and seed.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{DatasetSpec, ExperimentConfig, Overrides, SamplerSpec};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "BNN_MCMC_OUT";

#[derive(Debug, Parser)]
#[command(name = "bnn-mcmc", version, about = "MCMC for Bayesian neural networks")]
pub struct Cli {
    /// Worker threads for chains and diagnostics (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write noisy XOR train/test CSVs and a manifest.
    GenerateData(GenerateDataArgs),
    /// Run m chains and store them in a run directory.
    Sample(SampleArgs),
    /// Multivariate PSRF and ESS of one or more runs.
    Diagnose(DiagnoseArgs),
    /// Predictive accuracy per chain, or of the prior baseline.
    Predict(PredictArgs),
    /// Predictive probabilities on a square grid (two-feature binary models).
    Grid(GridArgs),
    /// One coordinate of each chain per iteration, burn-in included.
    Traces(TracesArgs),
    /// Per-chain accuracies for boxplots.
    BoxplotData(BoxplotArgs),
    /// Ensemble of SGD solutions above an accuracy threshold.
    SgdEnsemble(SgdArgs),
}

/// Where a command finds its config and chains.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Run directory written by `sample`.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Config file; defaults to `<run>/config.json`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain CSV files; default to every `chain_*.csv` in the run directory.
    #[arg(long = "chain", num_args = 1..)]
    pub chains: Vec<PathBuf>,
    /// Burn-in override; defaults to the value stored with each chain.
    #[arg(long)]
    pub burnin: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateDataArgs {
    /// Take the noisy XOR settings from this config instead of the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.55)]
    pub c: f64,
    #[arg(long, default_value_t = 125)]
    pub train_per_corner: usize,
    #[arg(long, default_value_t = 30)]
    pub test_per_corner: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: $BNN_MCMC_OUT/noisy_xor_data].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Run directory [default: $BNN_MCMC_OUT/<dataset>_<sampler>].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Run directories, one table row each.
    #[arg(long = "run", num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Chain files forming a single row instead of run directories.
    #[arg(long = "chain", num_args = 1..)]
    pub chains: Vec<PathBuf>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// JSON output for `--chain` input [default: diagnostics.json in the
    /// current directory]. Runs write `<run>/diagnostics.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the text table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub source: RunArgs,
    /// Draws per chain; defaults to the config's tail.
    #[arg(long)]
    pub tail: Option<usize>,
    /// Score prior draws instead of the chains.
    #[arg(long)]
    pub prior_baseline: bool,
    /// Prior draw sets to average; defaults to the config's
    /// `prior_replicates`.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Output directory [default: the run directory].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub source: RunArgs,
    /// Index of the chain to evaluate.
    #[arg(long, default_value_t = 0)]
    pub chain_index: usize,
    #[arg(long)]
    pub tail: Option<usize>,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 22)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TracesArgs {
    #[command(flatten)]
    pub source: RunArgs,
    /// Parameter index, zero-based.
    #[arg(long)]
    pub coordinate: usize,
    /// Output CSV [default: <run>/trace_<coordinate>.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoxplotArgs {
    #[command(flatten)]
    pub source: RunArgs,
    #[arg(long)]
    pub tail: Option<usize>,
    /// Add one prior-baseline replicate per chain as a second group.
    #[arg(long)]
    pub prior_baseline: bool,
    /// Output CSV [default: <run>/boxplot.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SgdArgs {
    /// Config supplying dataset, architecture and the optional `sgd` section.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Accuracy fraction a solution must exceed.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $BNN_MCMC_OUT/<dataset>_sgd].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> bnn_mcmc::Result<()> {
    if let Some(jobs) = cli.jobs {
        // fails only if the pool already exists, e.g. a second call in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::GenerateData(a) => commands::generate_data(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Grid(a) => commands::grid(&a),
        Command::Traces(a) => commands::traces(&a),
        Command::BoxplotData(a) => commands::boxplot_data(&a),
        Command::SgdEnsemble(a) => commands::sgd_ensemble(&a),
    }
}

/// Parses the process arguments, runs the command and reports failures as
/// `error[<category>]: <message>` on stderr with exit code 1.
pub fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
