//! Command-line front end for `zne-core`: mitigate circuit files, refit stored
//! data, and run the seeded mirror-circuit and H2 energy-surface benchmarks.

pub mod commands;
pub mod error;
pub mod parse;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use zne_core::{FactoryKind, NoiseModel};

pub use error::CliError;
use parse::{parse_factory, parse_scale_factors, Folding, Sampling, Shots};

#[derive(Debug, Parser)]
#[command(name = "zne", version, about = "Zero-noise extrapolation on a noisy density-matrix simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mitigate one circuit file against one observable; prints a JSON report.
    Run(RunArgs),
    /// Mirror-circuit benchmark: survival probability of `|0...0>`, raw and mitigated.
    BenchRb(BenchRbArgs),
    /// H2 energy surface from a coefficient file, raw and mitigated.
    BenchH2(BenchH2Args),
    /// Extrapolate stored `scale,value` data.
    Fit(FitArgs),
}

/// Comma-separated scale-factor list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFactors(pub Vec<f64>);

fn scale_factor_list(s: &str) -> Result<ScaleFactors, String> {
    parse_scale_factors(s).map(ScaleFactors)
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Base seed for folding, circuit generation and shot sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated scale factors, ascending, each >= 1.
    #[arg(long, value_parser = scale_factor_list)]
    pub scale_factors: Option<ScaleFactors>,
    #[arg(long, value_enum, default_value_t = Folding::Random)]
    pub folding: Folding,
    /// Executions averaged per scale factor.
    #[arg(long)]
    pub num_to_average: Option<usize>,
    /// `exact`, or a shot count per estimate.
    #[arg(long, default_value = "exact")]
    pub shots: Shots,
    /// Shot model when `--shots` is a count.
    #[arg(long, value_enum, default_value_t = Sampling::Pauli)]
    pub sampling: Sampling,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl CommonArgs {
    pub fn scale_factors_or(&self, default: &[f64]) -> Vec<f64> {
        self.scale_factors.as_ref().map(|s| s.0.clone()).unwrap_or_else(|| default.to_vec())
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Circuit JSON file.
    #[arg(long)]
    pub circuit: PathBuf,
    /// Observable JSON file.
    #[arg(long)]
    pub observable: PathBuf,
    #[arg(long, default_value = "none")]
    pub noise: NoiseModel,
    #[arg(long, value_parser = parse_factory, default_value = "richardson")]
    pub factory: FactoryKind,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchRbArgs {
    #[arg(long, default_value_t = 2)]
    pub qubits: usize,
    /// Total mirror-circuit length; must be even.
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value = "depolarizing:0.01")]
    pub noise: NoiseModel,
    /// Repeat for several factories. Default: linear, richardson, richardson:fml, poly:2, exp:0.25.
    #[arg(long, value_parser = parse_factory)]
    pub factory: Vec<FactoryKind>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchH2Args {
    /// Coefficient CSV with header `r,g0,g1,g2,g3,g4,g5`; `#` lines are comments.
    #[arg(long, default_value = "data/h2_sto6g_bk.csv")]
    pub coeffs: PathBuf,
    /// Repeat for several noise levels. Default: depolarizing:0.005 and depolarizing:0.02.
    #[arg(long)]
    pub noise: Vec<NoiseModel>,
    /// Points of the uniform ansatz-angle grid over [-pi/2, pi/2].
    #[arg(long, default_value_t = 41)]
    pub theta_points: usize,
    #[arg(long, value_parser = parse_factory, default_value = "poly:2")]
    pub factory: FactoryKind,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV with header `scale,value`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = parse_factory, default_value = "richardson")]
    pub factory: FactoryKind,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => commands::run::execute(&args),
        Command::BenchRb(args) => commands::bench_rb::execute(&args),
        Command::BenchH2(args) => commands::bench_h2::execute(&args),
        Command::Fit(args) => commands::fit::execute(&args),
    }
}

pub(crate) fn read_input(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {what} {}: {e}", path.display())))
}

pub(crate) fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
