use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod input;
mod report;

use report::Format;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "ENTCOST_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "entcost",
    version,
    about = "Entanglement of formation and entanglement cost, at desk scale"
)]
pub struct Cli {
    /// RNG seed; falls back to $ENTCOST_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entanglement of formation by ensemble search (closed form alongside for two qubits).
    Eof(EofArgs),
    /// Fidelity, Bures and trace distance between two states.
    Metrics(MetricsArgs),
    /// E_f(rho^n)/n for n = 1..n_max, with the Fekete check and cost bracket.
    Regularize(RegularizeArgs),
    /// Simulate the typical-set formation protocol on rho^n.
    Formation(FormationArgs),
    /// Seeded property fuzzing suite.
    Verify(VerifyArgs),
    /// Bures divergence of k-fold tensor powers at fixed per-copy fidelity.
    DemoDivergence(DivergenceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Ensemble size L (default r^2, capped at (dA dB)^2).
    #[arg(long = "ensemble-size", short = 'L')]
    pub ensemble_size: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Stop a start when a sweep improves by less than this (ebits).
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long = "max-cycles", default_value_t = 500)]
    pub max_cycles: usize,
}

#[derive(Debug, Args)]
pub struct EofArgs {
    /// State, pure-state or ensemble file; an ensemble also seeds the search.
    pub input: PathBuf,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Also write the optimal ensemble as a loadable ensemble file.
    #[arg(long = "ensemble-out")]
    pub ensemble_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub rho: PathBuf,
    pub sigma: PathBuf,
}

#[derive(Debug, Args)]
pub struct RegularizeArgs {
    pub input: PathBuf,
    #[arg(long = "n-max", default_value_t = 2)]
    pub n_max: usize,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Paper,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    Sub,
    Unit,
}

#[derive(Debug, Args)]
pub struct FormationArgs {
    /// Ensemble file, or a state whose ensemble is found by the optimizer.
    pub input: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub delta1: f64,
    #[arg(long, default_value_t = 0.25)]
    pub delta2: f64,
    #[arg(long, value_enum, default_value_t = WindowArg::Paper)]
    pub window: WindowArg,
    /// Variant of rho_T used for the reported fid1 check.
    #[arg(long, value_enum, default_value_t = NormalizeArg::Unit)]
    pub normalize: NormalizeArg,
    /// Run every n from 1 up to --n.
    #[arg(long)]
    pub sweep: bool,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON file with any of the suite counts; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random state pairs for the metric chain.
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub monotonicity: Option<usize>,
    #[arg(long)]
    pub continuity: Option<usize>,
    #[arg(long)]
    pub multiplicativity: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    /// Per-copy fidelity F.
    #[arg(long, default_value_t = 0.99)]
    pub fidelity: f64,
    #[arg(long = "k-max", default_value_t = 200)]
    pub k_max: usize,
    /// Report the first k with D_k above this.
    #[arg(long, default_value_t = 1.99)]
    pub threshold: f64,
    /// Take F from two state files instead, and check small k directly.
    #[arg(long, requires = "sigma")]
    pub rho: Option<PathBuf>,
    #[arg(long, requires = "rho")]
    pub sigma: Option<PathBuf>,
    #[arg(long = "direct-k", default_value_t = 3)]
    pub direct_k: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
