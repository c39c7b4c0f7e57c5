use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Forecast curves with the derivative-augmented autoregressive model.
#[derive(Debug, Parser)]
#[command(name = "arhd", version, args_override_self = true)]
pub struct Cli {
    /// Flat key=value file whose entries override flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for replicate- and grid-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a Wong process trajectory.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Estimate (φ, Ψ) from a trajectory.
    #[command(allow_negative_numbers = true)]
    Fit(FitArgs),
    /// Forecast the block after a trajectory's last block.
    #[command(allow_negative_numbers = true)]
    Predict(PredictArgs),
    /// Score every method on one held-out block.
    #[command(allow_negative_numbers = true)]
    Evaluate(EvaluateArgs),
    /// Rolling-origin cross-validation of the penalties.
    #[command(allow_negative_numbers = true)]
    Cv(CvArgs),
    /// Wong-process benchmark over independent replicates.
    #[command(allow_negative_numbers = true)]
    BenchWong(BenchWongArgs),
    /// Sea-surface temperature benchmark on a monthly series.
    #[command(allow_negative_numbers = true)]
    BenchSst(BenchSstArgs),
}

/// Block geometry of an input trajectory.
#[derive(Debug, Args)]
pub struct Geometry {
    /// Samples per block.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Block length.
    #[arg(long, default_value_t = 1.8348)]
    pub delta: f64,
    /// Basis size (odd); defaults to min(2⌊(m−1)/4⌋ + 1, 21).
    #[arg(long)]
    pub n_funcs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Penalty {
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct WongArgs {
    /// Number of blocks.
    #[arg(long, default_value_t = 105)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 1.8348)]
    pub delta: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Blocks discarded before recording.
    #[arg(long, default_value_t = 50)]
    pub burn_in: usize,
    /// Sub-steps per half grid interval of the innovation integral.
    #[arg(long, default_value_t = 16)]
    pub inner_steps: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Use the Wong generator (the only one available).
    #[arg(long)]
    pub wong: bool,
    #[command(flatten)]
    pub process: WongArgs,
    /// Independent stream of the seed.
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub geometry: Geometry,
    #[command(flatten)]
    pub penalty: Penalty,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub geometry: Geometry,
    #[command(flatten)]
    pub penalty: Penalty,
    /// Baseline dimension.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Held-out block (0-based); defaults to the last.
    #[arg(long)]
    pub target: Option<usize>,
    /// Report CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub geometry: Geometry,
    /// Candidate α values; the grid is every (α, β) combination.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.65")]
    pub betas: Vec<f64>,
    /// Defaults to min(10, n/4).
    #[arg(long)]
    pub folds: Option<usize>,
    /// Result JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchWongArgs {
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[command(flatten)]
    pub process: WongArgs,
    #[command(flatten)]
    pub penalty: Penalty,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchSstArgs {
    /// Monthly series, one `date,value` row per month.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Year of the first row; read from its date when omitted.
    #[arg(long)]
    pub start_year: Option<i32>,
    #[arg(long, default_value_t = 1986)]
    pub one_shot_year: i32,
    #[arg(long, default_value_t = 1987)]
    pub rolling_first: i32,
    #[arg(long, default_value_t = 1996)]
    pub rolling_last: i32,
    /// Block length of one year.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.4)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.4)]
    pub rolling_alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    pub rolling_beta: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Writes `<out>.one_shot.csv` and `<out>.rolling.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}
