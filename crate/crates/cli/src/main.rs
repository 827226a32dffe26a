use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

#[derive(Debug, Parser, Serialize)]
#[command(name = "hlasso", version, about = "Hierarchical lasso for group variable selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for replications and grid fits (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Fit at a single λ.
    Fit(FitArgs),
    /// Fit along a λ grid.
    Path(PathArgs),
    /// Run the simulation benchmark.
    Simulate(SimulateArgs),
    /// Choose λ by k-fold cross-validation.
    Tune(TuneArgs),
    /// Likelihood-ratio test that a set of coefficients is zero.
    Lrt(LrtArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Gaussian,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Hlasso,
    #[value(name = "adaptive_hlasso", alias = "adaptive-hlasso")]
    AdaptiveHlasso,
    Lasso,
    Ols,
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Group map: two-column CSV (variable, group) or JSON list of lists.
    #[arg(long, conflicts_with = "gmt", required_unless_present = "gmt")]
    pub groups: Option<PathBuf>,
    /// GMT gene-set file defining overlapping groups (binomial only).
    #[arg(long)]
    pub gmt: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: FamilyArg,
}

#[derive(Debug, Args, Serialize)]
pub struct PenaltyArgs {
    /// Use adaptive weights `1/|β̂|^γ` from an unpenalized pilot fit.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    /// Outer stopping tolerance on the largest coefficient change.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Outer iteration budget per fit.
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OutArgs {
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// Also write per-row training classifications as CSV (binomial only).
    #[arg(long)]
    pub misclass: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// `min:max:count`; defaults to 50 points below the data's λ_max.
    #[arg(long)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub case: Option<u32>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `min:max:count` relative to each replication's λ_max.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Noise SD; calibrated to signal-to-noise 3 when omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Directory for `per_rep.csv` and `summary.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Ignored for the binomial family, which always tunes the logistic fit.
    #[arg(long, value_enum, default_value = "hlasso")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// `min:max:count`; defaults to 50 points below the data's λ_max.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LrtArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Comma-separated variables pinned to zero under the null.
    #[arg(long, value_delimiter = ',', required = true)]
    pub null: Vec<String>,
    /// Comma-separated variables of the full model (default: all).
    #[arg(long, value_delimiter = ',')]
    pub support: Vec<String>,
    #[command(flatten)]
    pub output: OutArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // usage errors are input errors; --help and --version are not
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
