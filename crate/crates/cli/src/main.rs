//! `surface-pinn`: train, evaluate and check surface PINN benchmarks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "surface-pinn", version, about)]
struct Cli {
    /// Worker threads (default: all cores; 1 forces the deterministic
    /// single-thread path).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a network on a benchmark problem.
    Train(TrainArgs),
    /// Relative errors and field dumps for a trained checkpoint.
    Eval(EvalArgs),
    /// Numerical check of the intrinsic/ambient operator estimates.
    Verify(VerifyArgs),
    /// Print a Gauss–Legendre tableau and its order residual.
    Tableau {
        stages: usize,
    },
    /// Compare the loss gradient with central differences.
    FdCheck(FdCheckArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ProblemArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// Gauss–Legendre stage count (discrete-time problems).
    #[arg(long)]
    pub stages: Option<usize>,
    /// Exact solution: product-exp or trig-shift.
    #[arg(long)]
    pub solution: Option<String>,
    /// Reference horizon for time rescaling (discrete-time problems).
    #[arg(long)]
    pub reference: Option<f64>,
    #[arg(long)]
    pub surface_points: Option<usize>,
    #[arg(long)]
    pub time_levels: Option<usize>,
    /// Comma-separated layer sizes, e.g. 4,50,50,1.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Points per step; 0 means full batch.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Seed for mini-batch sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub log_every: Option<usize>,
    /// Write 0 for wall-clock seconds so logs are bit-reproducible.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Defaults to `<out>/checkpoint.txt`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory; defaults to the checkpoint's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Number of evaluation points (default: the problem's evaluation count).
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// sphere or torus.
    #[arg(long, default_value = "sphere")]
    pub surface: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quadrature resolution.
    #[arg(long, default_value_t = commands::VERIFY_RESOLUTION)]
    pub resolution: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct FdCheckArgs {
    /// `<hidden layers>x<width>`, e.g. 4x20.
    #[arg(default_value = "4x20")]
    pub shape: String,
    #[arg(long, default_value = "sphere-continuous")]
    pub problem: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Train(a) => commands::train(&a, cli.threads),
        Command::Eval(a) => commands::eval(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Tableau { stages } => commands::tableau(stages),
        Command::FdCheck(a) => commands::fd_check(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
