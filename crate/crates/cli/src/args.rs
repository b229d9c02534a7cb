use std::path::PathBuf;

use bridge_quantile::reference_math::DarlingErdosVariant;
use bridge_quantile::Engine;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Quantiles of weighted Brownian bridge suprema and weighted CUSUM tests.
#[derive(Debug, Parser)]
#[command(name = "bridgeq", version, about)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BRIDGEQ_WORKERS")]
    pub workers: Option<usize>,

    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 1, env = "BRIDGEQ_SEED")]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo q-quantile of sup w|B|.
    Quantile(QuantileArgs),
    /// Critical value of the weighted CUSUM test.
    CriticalValue(CriticalArgs),
    /// Run the change-point test on a data file.
    Test(TestArgs),
    /// Error and run-time benchmarks, written as CSV.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// Trimming: w vanishes outside ]eta, 1-eta[.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Singularity exponent of w at the end points.
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Adaptive,
    Equidistant,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Adaptive => Engine::Adaptive,
            EngineArg::Equidistant => Engine::Equidistant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    MonteCarlo,
    DarlingErdos,
    Kolmogorov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    AsStated,
    OneSided,
}

impl From<VariantArg> for DarlingErdosVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::AsStated => DarlingErdosVariant::AsStated,
            VariantArg::OneSided => DarlingErdosVariant::OneSided,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct QuantileArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[arg(long, default_value_t = 0.95)]
    pub q: f64,
    /// Target accuracy; k0 = ceil(epsilon^-2) samples are drawn.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = EngineArg::Adaptive)]
    pub engine: EngineArg,
    /// Confidence level of the order-statistic interval.
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    /// Coupled differences averaged per candidate n0.
    #[arg(long, default_value_t = 1000)]
    pub precompute_samples: usize,
    /// Largest i tried for n0 = 10 * 2^i.
    #[arg(long, default_value_t = 20)]
    pub i_max: u32,
    /// Equidistant error table (CSV from `bench strong --engine equidistant`).
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Include wall time in the output (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(long = "critical-source", value_enum, default_value_t = SourceArg::MonteCarlo)]
    pub source: SourceArg,
    #[arg(long, value_enum, default_value_t = VariantArg::AsStated)]
    pub variant: VariantArg,
    /// Accuracy of the Monte Carlo critical value.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = EngineArg::Adaptive)]
    pub engine: EngineArg,
}

#[derive(Debug, Clone, Args)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Series length; the darling-erdos value depends on it.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Error standard deviation the threshold is scaled by.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Also print the rejection boundary at this many points of ]0, 1[.
    #[arg(long, default_value_t = 0)]
    pub threshold_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    /// Data file: one number per line, or a headed CSV with --column.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV column by header name or 0-based index.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Known error standard deviation; estimated from the data if omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Include w(k/n)|T_k,n|/(sigma sqrt n) for every k.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Strong error E|S - A_n| against a 10x finer run on the same path.
    Strong(StrongArgs),
    /// Quantile error E|reference - Q_epsilon| over an epsilon sweep.
    Quantile(BenchQuantileArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StrongArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[arg(long, value_enum, default_value_t = EngineArg::Adaptive)]
    pub engine: EngineArg,
    /// Comma-separated n values (default depends on the engine).
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1000)]
    pub replications: usize,
    #[arg(long, default_value_t = 10)]
    pub reference_factor: usize,
    #[arg(long, env = "BRIDGEQ_OUTPUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchQuantileArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[arg(long, value_enum, default_value_t = EngineArg::Adaptive)]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 0.95)]
    pub q: f64,
    /// Comma-separated epsilon values (default 0.8^j, j = 2..=20).
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100)]
    pub replications: usize,
    /// True quantile to measure against; known for eta = 0, gamma in {0.25, 0.45}, q = 0.95.
    #[arg(long)]
    pub reference: Option<f64>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, env = "BRIDGEQ_OUTPUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
}
