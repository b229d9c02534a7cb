use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use bridge_quantile::bench::{
    bench_quantile, bench_strong, default_epsilon_sweep, default_strong_sweep, estimate_order,
    known_reference, record_file_name, write_records_to_path, Axis, BenchRecord, QuantileBench,
    StrongBench,
};
use bridge_quantile::calibration::Calibration;
use bridge_quantile::cusum::{
    critical_value, decide, decide_with_trace, read_csv_column, read_plain, threshold_curve,
    CriticalSource, SeriesSample, TestOutcome,
};
use bridge_quantile::quantile::{compute_quantile, Execution, QuantileRequest};
use bridge_quantile::{Engine, Error, WeightParams};
use serde::Serialize;

use crate::args::{
    BenchCommand, BenchQuantileArgs, Cli, Command, CriticalArgs, QuantileArgs, SourceArg, SourceArgs,
    StrongArgs, TestArgs, WeightArgs,
};
use crate::{EXIT_DATA, EXIT_DIVERGENCE, EXIT_IO, EXIT_USAGE};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::PrecomputeDivergence { .. } => EXIT_DIVERGENCE,
            Error::Domain(_) | Error::InvalidParams(_) | Error::Config(_) | Error::InsufficientSamples(_) => {
                EXIT_USAGE
            }
            Error::Data(_) | Error::Csv(_) => EXIT_DATA,
            Error::Io(_) => EXIT_IO,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError { code: EXIT_USAGE, message: message.into() }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Quantile(a) => cmd_quantile(a, cli.seed),
        Command::CriticalValue(a) => cmd_critical(a, cli.seed),
        Command::Test(a) => cmd_test(a, cli.seed),
        Command::Bench(BenchCommand::Strong(a)) => cmd_bench_strong(a, cli.seed),
        Command::Bench(BenchCommand::Quantile(a)) => cmd_bench_quantile(a, cli.seed),
    }
}

fn params(w: &WeightArgs) -> CliResult<WeightParams> {
    Ok(WeightParams::new(w.eta, w.gamma)?)
}

fn print_json<T: Serialize>(v: &T) -> CliResult<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| usage(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn load_calibration(path: Option<&Path>, p: &WeightParams) -> CliResult<Option<Calibration>> {
    let Some(path) = path else { return Ok(None) };
    let cal = Calibration::from_csv_path(path).map_err(|e| match e {
        Error::Io(_) => CliError::from(e),
        other => CliError { code: EXIT_DATA, message: format!("{}: {other}", path.display()) },
    })?;
    if !cal.matches(p) {
        return Err(usage(format!(
            "calibration table is for eta = {}, gamma = {}, not eta = {}, gamma = {}",
            cal.eta(),
            cal.gamma(),
            p.eta(),
            p.gamma()
        )));
    }
    Ok(Some(cal))
}

#[derive(Serialize)]
struct QuantileOut {
    eta: f64,
    gamma: f64,
    q: f64,
    epsilon: f64,
    engine: Engine,
    n0: usize,
    k0: usize,
    order_index: usize,
    quantile: f64,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_sec: Option<f64>,
}

fn cmd_quantile(a: &QuantileArgs, seed: u64) -> CliResult<()> {
    let p = params(&a.weight)?;
    let mut req = QuantileRequest::new(p, a.q, a.epsilon, seed).with_engine(a.engine.into());
    req.ci_level = a.ci_level;
    req.precompute_samples = a.precompute_samples;
    req.i_max = a.i_max;
    req.calibration = load_calibration(a.calibration.as_deref(), &p)?;
    let res = compute_quantile(&req)?;
    print_json(&QuantileOut {
        eta: p.eta(),
        gamma: p.gamma(),
        q: a.q,
        epsilon: a.epsilon,
        engine: req.engine,
        n0: res.n0,
        k0: res.k0,
        order_index: res.order_index,
        quantile: res.quantile,
        ci_lo: res.ci.map(|c| c.0),
        ci_hi: res.ci.map(|c| c.1),
        seed,
        elapsed_sec: a.timing.then_some(res.elapsed_sec),
    })
}

/// Parameters and critical-value source; `(0, 1/2)` is admitted only for
/// the darling-erdos source.
fn source_and_params(w: &WeightArgs, s: &SourceArgs, seed: u64) -> CliResult<(WeightParams, CriticalSource)> {
    let source = match s.source {
        SourceArg::MonteCarlo => CriticalSource::MonteCarlo { epsilon: s.epsilon, seed, engine: s.engine.into() },
        SourceArg::DarlingErdos => CriticalSource::DarlingErdos(s.variant.into()),
        SourceArg::Kolmogorov => CriticalSource::Kolmogorov,
    };
    let p = match s.source {
        SourceArg::DarlingErdos => WeightParams::new_unrestricted(w.eta, w.gamma)?,
        _ => params(w)?,
    };
    Ok((p, source))
}

#[derive(Serialize)]
struct CriticalOut {
    source: &'static str,
    eta: f64,
    gamma: f64,
    alpha: f64,
    n: usize,
    sigma: f64,
    /// For unit error variance.
    critical_value: f64,
    scaled_critical_value: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    threshold: Vec<(f64, f64)>,
}

fn cmd_critical(a: &CriticalArgs, seed: u64) -> CliResult<()> {
    let (p, source) = source_and_params(&a.weight, &a.source, seed)?;
    if !(a.sigma > 0.0) || !a.sigma.is_finite() {
        return Err(usage(format!("sigma must be positive, got {}", a.sigma)));
    }
    let c = critical_value(&source, &p, a.alpha, a.n)?;
    print_json(&CriticalOut {
        source: source.name(),
        eta: p.eta(),
        gamma: p.gamma(),
        alpha: a.alpha,
        n: a.n,
        sigma: a.sigma,
        critical_value: c,
        scaled_critical_value: a.sigma * c,
        threshold: threshold_curve(&p, c, a.sigma, a.threshold_points),
    })
}

#[derive(Serialize)]
struct TestOut {
    source: &'static str,
    eta: f64,
    gamma: f64,
    alpha: f64,
    #[serde(flatten)]
    outcome: TestOutcome,
}

fn read_series(a: &TestArgs) -> CliResult<Vec<f64>> {
    let data_err = |e: Error| CliError { code: EXIT_DATA, message: format!("{}: {e}", a.input.display()) };
    let f = File::open(&a.input).map_err(|e| data_err(e.into()))?;
    let xs = match &a.column {
        Some(col) => read_csv_column(f, &col.parse().expect("infallible")),
        None => read_plain(BufReader::new(f)),
    };
    xs.map_err(data_err)
}

fn cmd_test(a: &TestArgs, seed: u64) -> CliResult<()> {
    let (p, source) = source_and_params(&a.weight, &a.source, seed)?;
    let xs = read_series(a)?;
    let series = match a.sigma {
        Some(s) => SeriesSample::new(xs, s).map_err(|e| match e {
            Error::Data(m) => CliError { code: EXIT_DATA, message: m },
            other => other.into(),
        })?,
        None => SeriesSample::with_estimated_sigma(xs)?,
    };
    let c = critical_value(&source, &p, a.alpha, series.len())?;
    let outcome = if a.trace { decide_with_trace(&series, &p, c)? } else { decide(&series, &p, c)? };
    print_json(&TestOut { source: source.name(), eta: p.eta(), gamma: p.gamma(), alpha: a.alpha, outcome })
}

fn write_output(dir: &Path, name: &str, records: &[BenchRecord]) -> CliResult<()> {
    let io_err = |e: Error| CliError { code: EXIT_IO, message: format!("{}: {e}", dir.display()) };
    std::fs::create_dir_all(dir).map_err(|e| io_err(e.into()))?;
    let path = dir.join(name);
    write_records_to_path(&path, records).map_err(io_err)?;
    println!("wrote {}", path.display());
    for (label, axis) in [("n or epsilon", Axis::Sweep), ("time", Axis::Time)] {
        match estimate_order(records, axis) {
            Ok(fit) => println!(
                "log-log slope of error vs {label}: {:.4} (stderr {:.4}, {} points)",
                fit.slope, fit.stderr, fit.points
            ),
            Err(e) => println!("log-log slope of error vs {label}: n/a ({e})"),
        }
    }
    Ok(())
}

fn cmd_bench_strong(a: &StrongArgs, seed: u64) -> CliResult<()> {
    let p = params(&a.weight)?;
    let engine: Engine = a.engine.into();
    let cfg = StrongBench {
        params: p,
        engine,
        sweep: a.sweep.clone().unwrap_or_else(|| default_strong_sweep(engine)),
        replications: a.replications,
        reference_factor: a.reference_factor,
        seed,
    };
    let records = bench_strong(&cfg, Execution::Parallel)?;
    write_output(&a.output_dir, &record_file_name("strong", engine, &p), &records)
}

fn cmd_bench_quantile(a: &BenchQuantileArgs, seed: u64) -> CliResult<()> {
    let p = params(&a.weight)?;
    let engine: Engine = a.engine.into();
    let reference = match a.reference.or_else(|| known_reference(&p, a.q)) {
        Some(r) => r,
        None => {
            return Err(usage(format!(
                "no known reference quantile for eta = {}, gamma = {}, q = {}; pass --reference",
                p.eta(),
                p.gamma(),
                a.q
            )))
        }
    };
    let cfg = QuantileBench {
        params: p,
        engine,
        q: a.q,
        epsilons: a.epsilons.clone().unwrap_or_else(default_epsilon_sweep),
        replications: a.replications,
        reference,
        seed,
        calibration: load_calibration(a.calibration.as_deref(), &p)?,
    };
    let records = bench_quantile(&cfg, Execution::Parallel)?;
    write_output(&a.output_dir, &record_file_name("quantile", engine, &p), &records)
}
