use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qbvine", version, about = "Quasi-Bayesian vine density estimation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Config file (`.toml` or `.json`); missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory, created if needed.
    #[arg(long, global = true, default_value = "qbvine-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file of numeric columns.
    #[arg(long)]
    pub data: PathBuf,

    /// The first row is data rather than a header.
    #[arg(long)]
    pub no_header: bool,

    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Regression,
    Classification,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a joint density model to a CSV file.
    Fit {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Per-row log densities and the log predictive score under a fitted model.
    Density {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Draw samples from a fitted joint model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        count: usize,
    },
    /// Conditional scores or class predictions from a fitted conditional model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Column holding the observed target (header name or 1-based index).
        #[arg(long)]
        target: Option<String>,
    },
    /// Fit a conditional model of one column given the others.
    FitConditional {
        #[command(flatten)]
        data: DataArgs,
        /// Target column (header name or 1-based index).
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = TaskArg::Regression)]
        task: TaskArg,
    },
    /// Benchmark on synthetic four-component Gaussian mixtures.
    BenchGmm {
        #[arg(long, value_delimiter = ',', default_value = "10")]
        dims: Vec<usize>,
        /// Total sample sizes before the train/test split.
        #[arg(long = "n", value_delimiter = ',', default_value = "100,500")]
        sizes: Vec<usize>,
        /// Number of replicate seeds per (d, n).
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit { .. } => "fit",
            Command::Density { .. } => "density",
            Command::Sample { .. } => "sample",
            Command::Predict { .. } => "predict",
            Command::FitConditional { .. } => "fit-conditional",
            Command::BenchGmm { .. } => "bench-gmm",
        }
    }
}
