//! Command-line front end for the clusterchain simulators: parameter scans
//! over the cluster-Ising chain with reproducible, self-describing output.
//!
//! Subcommands: `exact` (free-fermion string correlators and energies),
//! `vmps` (variational MPS ground-state search), `locent` (Monte Carlo
//! localizable entanglement), `disentangle` (optimal pairwise measurement
//! angles and the associated POVM), `scan` (projective/adaptive two-angle
//! feasibility scan).
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime/numerical
//! failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Common, Grid, LocentMode};
use output::OutputFormat;

/// CLI failure carrying the process exit code distinction: configuration
/// problems (exit 2) versus runtime failures (exit 3).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Runtime(err) => write!(f, "runtime failure: {err:#}"),
        }
    }
}

macro_rules! runtime_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Runtime(anyhow::Error::from(e))
            }
        }
    )*};
}

runtime_from!(
    clusterchain::chain::ChainError,
    clusterchain::oracle::OracleError,
    clusterchain::mps::MpsError,
    clusterchain::vmps::VmpsError,
    clusterchain::locent::LocentError,
    clusterchain::disentangle::DisentangleError,
    clusterchain::fermion::FermionError,
    std::io::Error
);

#[derive(Parser)]
#[command(
    name = "clusterchain",
    version,
    about = "Spin-chain simulators: cluster stabilizers, fields, Ising coupling"
)]
struct Cli {
    /// TOML or JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; per-point seeds are derived from it by hashing.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; `-` or absent means stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Size of the worker thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Fully reproducible mode: forces a single worker thread and records
    /// the flag in the output metadata.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Directory for per-grid-point checkpoints; finished points are
    /// reloaded from it on rerun.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free-fermion solution: energies, gap, and string correlators on a
    /// ring at zero longitudinal field.
    Exact(ExactArgs),
    /// Variational MPS ground search with restarts; reports the
    /// best-restart ring state per transverse-field point.
    Vmps(VmpsArgs),
    /// Localizable entanglement between two ring sites under the
    /// measure-and-correct protocol (Monte Carlo or exhaustive).
    Locent(LocentArgs),
    /// Optimal disentangling angles for the four-qubit chain, with outcome
    /// probabilities, residuals, and the postselected POVM.
    Disentangle(DisentangleArgs),
    /// Two-angle feasibility scan for projective/adaptive disentangling.
    Scan(ScanArgs),
}

#[derive(Args)]
struct ExactArgs {
    /// Ring sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Ising coupling grid (`start:stop:steps` or comma list).
    #[arg(long)]
    j: Option<Grid>,
    /// Transverse field.
    #[arg(long)]
    bx: Option<f64>,
    /// Compare every row against dense diagonalization (needs n ≤ 14).
    #[arg(long)]
    cross_check: bool,
}

#[derive(Args)]
struct VmpsArgs {
    /// Chain length (even, ≥ 8).
    #[arg(long)]
    n: Option<usize>,
    /// MPS bond dimension.
    #[arg(long)]
    bond_dim: Option<usize>,
    /// Full sweeps per restart.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Independent random restarts per point.
    #[arg(long)]
    restarts: Option<usize>,
    /// Ising coupling.
    #[arg(long)]
    j: Option<f64>,
    /// Transverse-field grid.
    #[arg(long)]
    bx: Option<Grid>,
    /// Longitudinal field.
    #[arg(long)]
    bz: Option<f64>,
    /// Emit one row per restart instead of one per grid point.
    #[arg(long)]
    per_restart: bool,
    /// Add dense ring ground energies for comparison (needs n ≤ 12).
    #[arg(long)]
    cross_check: bool,
}

#[derive(Args)]
struct LocentArgs {
    /// Scan axis: a coupling grid, or a separation sweep for length
    /// classification.
    #[arg(long, value_enum)]
    mode: Option<LocentMode>,
    /// Ring sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Ising coupling grid (couplings mode) or single value (separations).
    #[arg(long)]
    j: Option<Grid>,
    /// Transverse field.
    #[arg(long)]
    bx: Option<f64>,
    /// Longitudinal field.
    #[arg(long)]
    bz: Option<f64>,
    /// Bond dimension of the variational state (when one is needed).
    #[arg(long)]
    bond_dim: Option<usize>,
    /// Monte Carlo samples per grid point.
    #[arg(long)]
    samples: Option<usize>,
    /// Buffer depth: z-measured sites shielding each endpoint.
    #[arg(long)]
    n_z: Option<usize>,
    /// Variational restarts for state preparation.
    #[arg(long)]
    restarts: Option<usize>,
    /// Variational sweeps for state preparation.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Enumerate every branch instead of sampling (needs n ≤ 14).
    #[arg(long)]
    exhaustive: bool,
    /// Endpoint separations for separations mode (odd, comma separated).
    #[arg(long, value_delimiter = ',')]
    separations: Option<Vec<usize>>,
}

#[derive(Args)]
struct DisentangleArgs {
    /// Ising coupling grid.
    #[arg(long)]
    j: Option<Grid>,
    /// POVM scale factor in (0, 1].
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct ScanArgs {
    /// Ising coupling grid.
    #[arg(long)]
    j: Option<Grid>,
    /// Angle grid resolution in radians (at most 1e-2).
    #[arg(long)]
    resolution: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => config::FileConfig::default(),
    };
    let threads = if cli.deterministic && cli.threads.is_none() {
        Some(1)
    } else {
        cli.threads.or(file.threads)
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let common = Common {
        seed: cli.seed.or(file.seed).unwrap_or(7),
        format: cli.format.or(file.format).unwrap_or(OutputFormat::Csv),
        deterministic: cli.deterministic || file.deterministic.unwrap_or(false),
    };
    let checkpoint = commands::Checkpoint::new(cli.checkpoint.clone())?;

    let (meta, table) = match &cli.command {
        Command::Exact(args) => {
            let cfg = commands::exact::resolve(args, file.exact.unwrap_or_default())?;
            commands::exact::run(&cfg, &common)?
        }
        Command::Vmps(args) => {
            let cfg = commands::vmps::resolve(args, file.vmps.unwrap_or_default())?;
            commands::vmps::run(&cfg, &common, &checkpoint)?
        }
        Command::Locent(args) => {
            let cfg = commands::locent::resolve(args, file.locent.unwrap_or_default())?;
            commands::locent::run(&cfg, &common, &checkpoint)?
        }
        Command::Disentangle(args) => {
            let cfg = commands::disentangle::resolve(args, file.disentangle.unwrap_or_default())?;
            commands::disentangle::run(&cfg, &common)?
        }
        Command::Scan(args) => {
            let cfg = commands::scan::resolve(args, file.scan.unwrap_or_default())?;
            commands::scan::run(&cfg, &common)?
        }
    };

    let rendered = output::render(&meta, &table, common.format);
    output::write_output(cli.out.as_deref(), &rendered)?;
    Ok(())
}
