//! `spinscape`: design, verify and export static bias controllers for spin
//! rings and chains.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinscape::optimizer::BiasInit;
use spinscape::Topology;

/// Environment variable naming the default directory for output files.
pub const OUT_DIR_ENV: &str = "SPINSCAPE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "spinscape",
    version,
    about = "Static bias controllers for excitation transfer in XX spin networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize biases for transfer between two spins.
    Design(DesignArgs),
    /// Optimize biases that keep the excitation at one spin.
    Localize(LocalizeArgs),
    /// Check superoptimality, signature and sensitivity of a controller.
    Verify(VerifyArgs),
    /// Write plot-ready CSV from experiment records.
    ExportPlot(ExportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Ring,
    Chain,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Ring => Topology::Ring,
            TopologyArg::Chain => Topology::Chain,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TimeMode {
    Fixed,
    Free,
    /// Alias of `free`: time optimized jointly with the biases.
    Joint,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BiasInitArg {
    Constant,
    Peaks,
    Troughs,
    RandomMix,
    Mixed,
}

impl From<BiasInitArg> for BiasInit {
    fn from(b: BiasInitArg) -> Self {
        match b {
            BiasInitArg::Constant => BiasInit::Constant,
            BiasInitArg::Peaks => BiasInit::Peaks,
            BiasInitArg::Troughs => BiasInit::Troughs,
            BiasInitArg::RandomMix => BiasInit::RandomMix,
            BiasInitArg::Mixed => BiasInit::Mixed,
        }
    }
}

#[derive(Args, Debug)]
pub struct NetworkArgs {
    /// Number of spins.
    #[arg(long = "n")]
    pub n_spins: usize,
    #[arg(long, value_enum, default_value_t = TopologyArg::Ring)]
    pub topology: TopologyArg,
    /// Weight of the ZZ interaction term.
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = BiasInitArg::Mixed)]
    pub bias_init: BiasInitArg,
    /// Optimize every bias independently instead of per reflection orbit.
    #[arg(long)]
    pub no_symmetry: bool,
    /// Box constraint |D_k| <= bound.
    #[arg(long)]
    pub bias_bound: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub grad_tol: f64,
    /// Fidelity a controller must reach to count for the fastest summary.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output record path. Defaults to a generated name in $SPINSCAPE_OUT_DIR.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Input spin (1-based).
    #[arg(long)]
    pub from: usize,
    /// Output spin (1-based).
    #[arg(long)]
    pub to: usize,
    #[arg(long, value_enum, default_value_t = TimeMode::Free)]
    pub time: TimeMode,
    /// Fixed readout times as `start:step:stop` or a single value.
    #[arg(long)]
    pub t_grid: Option<String>,
    /// Search interval `lo:hi` for free time.
    #[arg(long, default_value = "0:30")]
    pub t_range: String,
    /// Half-width of the readout window.
    #[arg(long)]
    pub window: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct LocalizeArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Spin to hold the excitation at (1-based).
    #[arg(long)]
    pub node: usize,
    /// Holding time.
    #[arg(long)]
    pub hold: f64,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Experiment record holding the controller.
    #[arg(long, conflicts_with_all = ["n_spins", "bias", "time", "from", "to"])]
    pub record: Option<PathBuf>,
    /// Controller index within the record (0 is the best).
    #[arg(long, default_value_t = 0, requires = "record")]
    pub index: usize,
    #[arg(long = "n", requires_all = ["bias", "time", "from", "to"])]
    pub n_spins: Option<usize>,
    #[arg(long, value_enum, default_value_t = TopologyArg::Ring)]
    pub topology: TopologyArg,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    #[arg(long)]
    pub from: Option<usize>,
    #[arg(long)]
    pub to: Option<usize>,
    /// Comma-separated bias values, one per spin.
    #[arg(long, allow_hyphen_values = true)]
    pub bias: Option<String>,
    /// Readout time.
    #[arg(long)]
    pub time: Option<f64>,
    /// Half-width of the readout window.
    #[arg(long)]
    pub window: Option<f64>,
    /// Tolerance for the superoptimality verdict.
    #[arg(long, default_value_t = spinscape::analysis::SUPEROPTIMAL_EPS)]
    pub eps: f64,
    /// Report path. Defaults to `verify-report.json` in $SPINSCAPE_OUT_DIR.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// Experiment record(s); `fastest-table` takes one row per record.
    #[arg(long = "record", required = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// One of time-vs-infidelity, best-per-time, infidelity-histogram,
    /// rank-vs-sensitivity, fastest-table, evolution.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<spinscape::Error> for CliError {
    fn from(e: spinscape::Error) -> Self {
        use spinscape::Error;
        match e {
            Error::Record(_) => CliError::Io(e.to_string()),
            Error::Numerical(_) | Error::InsufficientData { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(args) => commands::design(&args),
        Command::Localize(args) => commands::localize(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::ExportPlot(args) => commands::export_plot(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
