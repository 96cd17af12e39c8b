mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Admittance matrix identification from synchronized phasor records.
#[derive(Debug, Parser)]
#[command(name = "ipf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate load scenarios on a case and write phasor records and the true matrix.
    Gen(GenArgs),
    /// Estimate an admittance matrix from a phasor table.
    Identify(IdentifyArgs),
    /// Kron-reduce a matrix onto its non-hidden nodes.
    Kron(KronArgs),
    /// Split a reduced matrix into sparse and low-rank parts.
    Decompose(DecomposeArgs),
    /// Recover a radial network with hidden nodes from its reduced matrix.
    RecoverRadial(RecoverArgs),
    /// Compare an estimate with the true matrix.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ls,
    Nnls,
    Reduced,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Ls => "ls",
            Mode::Nnls => "nnls",
            Mode::Reduced => "reduced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Diagonal {
    Constrained,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sign {
    Conductance,
    Both,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Case script with bus, gen and branch tables.
    #[arg(long)]
    pub case: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of time slots.
    #[arg(long, default_value_t = 15)]
    pub slots: usize,
    /// Uniform load scaling range `lo:hi`.
    #[arg(long, default_value = "0.8:1.2")]
    pub scale: String,
    /// Linear signal-to-noise ratio; `inf` for exact phasors.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated bus ids left out of the phasor table.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<String>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Phasor table.
    #[arg(long)]
    pub meas: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Ls)]
    pub mode: Mode,
    /// Row-sum rule for the diagonal.
    #[arg(long, value_enum, default_value_t = Diagonal::Constrained)]
    pub diagonal: Diagonal,
    /// Table `bus,re,im` of diagonal entries to fix (free diagonal only).
    #[arg(long)]
    pub known_diag: Option<PathBuf>,
    /// Comma-separated buses to drop before a reduced estimate.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<String>,
    /// Parameters kept nonnegative in `nnls` mode.
    #[arg(long, value_enum, default_value_t = Sign::Conductance)]
    pub sign: Sign,
    /// Use only the first K slots.
    #[arg(long)]
    pub slots: Option<usize>,
    /// Fail with exit code 4 unless the solution is unique.
    #[arg(long)]
    pub require_exact: bool,
}

#[derive(Debug, Args)]
pub struct KronArgs {
    /// Matrix file; give this or `--case`.
    #[arg(long, conflicts_with = "case")]
    pub input: Option<PathBuf>,
    /// Case script, reduced from its physical matrix.
    #[arg(long)]
    pub case: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub hidden: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Reduced matrix file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Weight of the nuclear norm [default: 1/sqrt(n)].
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_rel: f64,
    #[arg(long, default_value_t = 10000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Reduced matrix file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Edge threshold [default: 1e-6 of the largest entry].
    #[arg(long)]
    pub zero_threshold: Option<f64>,
    /// Ratio-test tolerance (1e-3 suits noisy estimates).
    #[arg(long, default_value_t = ipf::radial::TOL_RATIO)]
    pub ratio_tol: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// True matrix file.
    #[arg(long)]
    pub truth: PathBuf,
    /// Estimated matrix file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Truth buses absent from the estimate. With recovered hidden nodes
    /// they are matched structurally; otherwise the truth is restricted to
    /// the remaining buses.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<String>,
    /// Support threshold for precision and recall.
    #[arg(long, default_value_t = 0.5)]
    pub zero_threshold: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Identify(a) => commands::identify(a),
        Command::Kron(a) => commands::kron(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::RecoverRadial(a) => commands::recover_radial(a),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
