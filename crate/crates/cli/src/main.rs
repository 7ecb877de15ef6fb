//! `fbc`: capacity regions, bounds, gaps and simulations for two-user fading
//! broadcast channels.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbc_core::quad::QuadratureConfig;

use crate::io::CliError;

#[derive(Parser, Debug)]
#[command(name = "fbc", version, about)]
pub struct Cli {
    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Capacity region of a layered erasure channel pair (CSV)
    ErasureRegion(ErasureArgs),
    /// Outer bound of a fading Gaussian channel pair (CSV)
    GaussianOuter(GaussianArgs),
    /// Binary-expansion inner bound of a fading Gaussian channel pair (CSV)
    BesInner(BesArgs),
    /// Universal gap, or the measured gap of a channel pair (JSON)
    Gap(GapArgs),
    /// Monte Carlo runs (JSON lines of reports)
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct ErasureArgs {
    /// JSON file `{"user1": {"q": .., "pmf": [..]}, "user2": {..}}`
    #[arg(long)]
    input: PathBuf,
    /// Output file (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct OmegaGrid {
    /// Smallest weight on R2
    #[arg(long, default_value_t = 0.01)]
    omega_min: f64,
    /// Largest weight on R2
    #[arg(long, default_value_t = 100.0)]
    omega_max: f64,
    /// Log-spaced weights between the two limits
    #[arg(long, default_value_t = 64)]
    omega_points: usize,
}

#[derive(Args, Debug, Clone)]
pub struct QuadArgs {
    /// Absolute quadrature tolerance in bits [default: 1e-9]
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance [default: 1e-9]
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Interval bisections allowed per integral [default: 4000]
    #[arg(long)]
    max_subdivisions: Option<usize>,
}

impl QuadArgs {
    fn config(&self) -> Result<QuadratureConfig, CliError> {
        let mut cfg = QuadratureConfig::default();
        if let Some(v) = self.abs_tol {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.max_subdivisions {
            cfg.max_subdivisions = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct GaussianArgs {
    /// JSON file `{"user1": <fading law>, "user2": <fading law>}`
    #[arg(long)]
    input: PathBuf,
    /// Output file (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    grid: OmegaGrid,
    #[command(flatten)]
    quad: QuadArgs,
    /// Report rates per real dimension (halved)
    #[arg(long)]
    real_channel: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Switch {
    On,
    Off,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Threshold,
    AwgnRayleigh1,
    AwgnRayleigh2,
}

#[derive(Args, Debug)]
pub struct BesArgs {
    /// JSON file `{"user1": <fading law>, "user2": <fading law>}`
    #[arg(long)]
    input: PathBuf,
    /// Output file (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Strip each user's less significant layers before detection
    #[arg(long, value_enum, default_value = "on")]
    stripping: Switch,
    /// JSON file with a list of level assignments (overrides --style)
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Built-in assignment family
    #[arg(long, value_enum, default_value = "threshold")]
    style: Style,
    /// Also emit the outer-bound rows
    #[arg(long)]
    with_outer: bool,
    #[command(flatten)]
    grid: OmegaGrid,
    #[command(flatten)]
    quad: QuadArgs,
    /// Report rates per real dimension (halved)
    #[arg(long)]
    real_channel: bool,
}

#[derive(Args, Debug)]
pub struct GapArgs {
    /// Channel pair to measure; without it only the universal gap is reported
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Quantization step (default: the minimizer over [0.5, 50])
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    grid: OmegaGrid,
    #[command(flatten)]
    quad: QuadArgs,
    /// Report rates per real dimension (halved)
    #[arg(long)]
    real_channel: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Level-partition scheme on an erasure pair
    Erasure,
    /// Single-layer detector at a fixed state
    Detector,
    /// Full superposition link to one user of a fading pair
    Link,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// What to simulate
    #[arg(long, value_enum)]
    scenario: Scenario,
    /// Channel pair (erasure or fading, by scenario)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Random seed; equal seeds give identical output
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Symbols or detector trials
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    /// Weight selecting the erasure partition
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Detector state
    #[arg(long)]
    snr: Option<f64>,
    /// Detected layer
    #[arg(long, default_value_t = 1)]
    level: u32,
    /// Stripped interference depth, or `inf`
    #[arg(long, default_value = "0")]
    depth: String,
    /// Receiving user for the link scenario
    #[arg(long, default_value_t = 1)]
    user: u8,
    /// Genie-aided stripping of the user's less significant layers
    #[arg(long, value_enum, default_value = "on")]
    stripping: Switch,
    /// JSON file with one level assignment for the link scenario
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Without --assignment: user 2 takes levels 1..=n2, user 1 the rest
    #[arg(long, default_value_t = 0)]
    n2: u32,
    #[command(flatten)]
    quad: QuadArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FBC_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}
