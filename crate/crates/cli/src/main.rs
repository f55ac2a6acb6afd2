//! Command-line front end: model/data generation, fitting and
//! classification on files, asymptotic risk tables, weight-function and
//! risk-curve emission, Monte Carlo experiments.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 numeric
//! non-convergence, 3 I/O error.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use blockdiscrim::Error;

#[derive(Parser)]
#[command(
    name = "blockdiscrim",
    about = "Block-structured Gaussian classifiers with discriminative-power weighting",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic population model and a labeled dataset.
    Generate(GenerateArgs),
    /// Fit on a training file and classify a test file.
    Classify(ClassifyArgs),
    /// Print the asymptotic risk table for one configuration.
    Risk(RiskArgs),
    /// Emit the optimal weight function on a grid of u values.
    Weightfn(WeightfnArgs),
    /// Emit optimal and unit risk over a grid of block powers.
    Riskcurve(RiskcurveArgs),
    /// Run a seeded Monte Carlo experiment and write its report.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of blocks.
    #[arg(long)]
    kappa: usize,
    /// Features per block.
    #[arg(long = "block-size")]
    block_size: usize,
    /// Per-block discriminative power.
    #[arg(long)]
    gamma2: f64,
    /// Training size the power is calibrated against.
    #[arg(long)]
    n: usize,
    /// Prior probability of class 1.
    #[arg(long, default_value_t = 0.5)]
    pi1: f64,
    /// Samples to draw per class.
    #[arg(long = "count-per-class")]
    count_per_class: usize,
    #[arg(long)]
    seed: u64,
    /// Output path for the model JSON.
    #[arg(long = "model-out")]
    model_out: String,
    /// Output path for the dataset CSV.
    #[arg(long = "data-out")]
    data_out: String,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Model JSON path (supplies partition, covariances and priors).
    #[arg(long)]
    model: String,
    /// Training CSV with equal class counts.
    #[arg(long)]
    train: String,
    /// Test CSV; label 0 marks an unlabeled row.
    #[arg(long)]
    test: String,
    /// Weight scheme: unit, optimal or `fixed:<path>`.
    #[arg(long, default_value = "unit")]
    scheme: String,
    /// Power distribution for the optimal scheme: `point:<gamma2>` or a JSON path.
    #[arg(long)]
    h: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct RiskArgs {
    /// Block size.
    #[arg(long)]
    m: usize,
    /// Block-to-sample ratio limit.
    #[arg(long)]
    rho: f64,
    /// Point-mass power; alternative to --h.
    #[arg(long, conflicts_with = "h")]
    gamma2: Option<f64>,
    /// Power distribution: `point:<gamma2>` or a JSON path.
    #[arg(long)]
    h: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pi1: f64,
}

#[derive(Args)]
struct WeightfnArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, conflicts_with = "h")]
    gamma2: Option<f64>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long = "u-min")]
    u_min: f64,
    #[arg(long = "u-max")]
    u_max: f64,
    #[arg(long = "u-steps")]
    u_steps: usize,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct RiskcurveArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    kappa: usize,
    #[arg(long)]
    n: usize,
    #[arg(long = "gamma2-min")]
    gamma2_min: f64,
    #[arg(long = "gamma2-max")]
    gamma2_max: f64,
    #[arg(long)]
    steps: usize,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    kappa: usize,
    #[arg(long = "block-size")]
    block_size: usize,
    /// Uniform per-block power; alternative to --h.
    #[arg(long, conflicts_with = "h")]
    gamma2: Option<f64>,
    /// Power distribution assigned cyclically to blocks.
    #[arg(long)]
    h: Option<String>,
    /// Training size per class and replication.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long = "test-per-class")]
    test_per_class: usize,
    /// Comma-separated schemes: unit, optimal, `fixed:<path>`.
    #[arg(long, default_value = "unit")]
    schemes: String,
    #[arg(long, default_value_t = 0.5)]
    pi1: f64,
    #[arg(long)]
    seed: u64,
    /// Output prefix; writes `<out>.json` and `<out>.csv`.
    #[arg(long)]
    out: String,
    /// Run replications on a thread pool (BLOCKDISCRIM_THREADS caps it).
    #[arg(long)]
    parallel: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Classify(args) => commands::classify(args),
        Command::Risk(args) => commands::risk(args),
        Command::Weightfn(args) => commands::weightfn(args),
        Command::Riskcurve(args) => commands::riskcurve(args),
        Command::Simulate(args) => commands::simulate(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        Error::Convergence { .. } => 2,
        Error::Replication { source, .. } => exit_code(source),
        _ => 1,
    }
}
