//! Error and run-time benchmarks for the path discretizations and the
//! quantile algorithms, with CSV output and log-log order estimates.
//!
//! Strong error at `n` is `E|S - A_n|` with `S` replaced by a run of the same
//! engine on the same trajectory at `reference_factor * max(n)` points.
//! Quantile error at `epsilon` is `E|reference - Q_epsilon|`.

use std::hint::black_box;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::quantile::{compute_quantile_serial, Engine, Execution, QuantileRequest};
use crate::sampler::{stream_index, RandomStream, StreamPurpose};
use crate::sup_approx::{adaptive_sup, adaptive_sup_value, equidistant_nested, equidistant_sup};
use crate::weights::WeightParams;

/// Two-sided 0.95 normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_STRONG_REPLICATIONS: usize = 1_000;
pub const DEFAULT_QUANTILE_REPLICATIONS: usize = 100;
pub const DEFAULT_REFERENCE_FACTOR: usize = 10;

pub const ADAPTIVE_SWEEP: [usize; 9] = [5, 11, 23, 50, 108, 232, 500, 1077, 2321];
pub const EQUIDISTANT_SWEEP: [usize; 9] = [5, 10, 50, 100, 500, 1000, 2000, 5000, 10000];

/// Default strong-error sweep for an engine.
pub fn default_strong_sweep(engine: Engine) -> Vec<usize> {
    match engine {
        Engine::Adaptive => ADAPTIVE_SWEEP.to_vec(),
        Engine::Equidistant => EQUIDISTANT_SWEEP.to_vec(),
    }
}

/// `0.8^j` for `j = 2..=20`, i.e. `0.64` down to about `0.0115`.
pub fn default_epsilon_sweep() -> Vec<f64> {
    (2..=20).map(|j| 0.8f64.powi(j)).collect()
}

/// Long-run 0.95-quantiles used as quantile-benchmark references.
pub fn known_reference(params: &WeightParams, q: f64) -> Option<f64> {
    if params.eta() != 0.0 || q != 0.95 {
        return None;
    }
    match params.gamma() {
        0.25 => Some(2.0008),
        0.45 => Some(2.9222),
        _ => None,
    }
}

/// One row of benchmark output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// `n` for strong runs, `epsilon` for quantile runs.
    pub sweep: f64,
    pub engine: Engine,
    pub eta: f64,
    pub gamma: f64,
    pub q: Option<f64>,
    pub error: f64,
    pub error_hw: f64,
    pub time_sec: f64,
    pub time_hw: f64,
}

#[derive(Debug, Clone)]
pub struct StrongBench {
    pub params: WeightParams,
    pub engine: Engine,
    pub sweep: Vec<usize>,
    pub replications: usize,
    pub reference_factor: usize,
    pub seed: u64,
}

impl StrongBench {
    pub fn new(params: WeightParams, engine: Engine, seed: u64) -> Self {
        Self {
            params,
            engine,
            sweep: default_strong_sweep(engine),
            replications: DEFAULT_STRONG_REPLICATIONS,
            reference_factor: DEFAULT_REFERENCE_FACTOR,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantileBench {
    pub params: WeightParams,
    pub engine: Engine,
    pub q: f64,
    pub epsilons: Vec<f64>,
    pub replications: usize,
    pub reference: f64,
    pub seed: u64,
    pub calibration: Option<Calibration>,
}

impl QuantileBench {
    pub fn new(params: WeightParams, engine: Engine, q: f64, reference: f64, seed: u64) -> Self {
        Self {
            params,
            engine,
            q,
            epsilons: default_epsilon_sweep(),
            replications: DEFAULT_QUANTILE_REPLICATIONS,
            reference,
            seed,
            calibration: None,
        }
    }
}

fn mean_hw(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z_95 * (var / n).sqrt())
}

fn check_replications(r: usize) -> Result<()> {
    if r < 2 {
        return Err(Error::Config(format!("need at least 2 replications, got {r}")));
    }
    Ok(())
}

/// Strong error and per-call time for each `n` in the sweep.
pub fn bench_strong(cfg: &StrongBench, exec: Execution) -> Result<Vec<BenchRecord>> {
    cfg.params.ensure_finite_supremum()?;
    check_replications(cfg.replications)?;
    let mut sweep = cfg.sweep.clone();
    if sweep.is_empty() || sweep.contains(&0) {
        return Err(Error::Config("sweep must be a nonempty list of positive n".into()));
    }
    sweep.sort_unstable();
    sweep.dedup();
    if cfg.reference_factor < 2 {
        return Err(Error::Config("reference factor must be at least 2".into()));
    }
    let reference_n = cfg.reference_factor * sweep[sweep.len() - 1];
    if cfg.engine == Engine::Equidistant {
        if sweep[0] < 2 {
            return Err(Error::Config("equidistant sweep values must be at least 2".into()));
        }
        if let Some(n) = sweep.iter().find(|&&n| !reference_n.is_multiple_of(n)) {
            return Err(Error::Config(format!(
                "equidistant sweep value {n} does not divide the reference grid size {reference_n}"
            )));
        }
    }

    let params = cfg.params;
    let per_rep = exec.map_indexed(cfg.replications, |r| {
        let key = stream_index(StreamPurpose::Bench, 0, r as u64);
        let mut rs = RandomStream::new(cfg.seed, key);
        let (reference, values) = match cfg.engine {
            Engine::Adaptive => {
                let run = adaptive_sup(&params, &mut rs, reference_n, &sweep)?;
                (run.value, run.checkpoints.into_iter().map(|(_, v)| v).collect::<Vec<_>>())
            }
            Engine::Equidistant => equidistant_nested(&params, &mut rs, reference_n, &sweep)?,
        };
        let mut out = Vec::with_capacity(sweep.len());
        for (i, &n) in sweep.iter().enumerate() {
            let elapsed = match cfg.engine {
                Engine::Adaptive => {
                    // replays the reference trajectory up to n
                    let mut rs = RandomStream::new(cfg.seed, key);
                    let t = Instant::now();
                    let v = adaptive_sup_value(&params, &mut rs, n)?;
                    let dt = t.elapsed().as_secs_f64();
                    debug_assert_eq!(v.to_bits(), values[i].to_bits());
                    dt
                }
                Engine::Equidistant => {
                    let mut rs = RandomStream::new(
                        cfg.seed,
                        stream_index(StreamPurpose::Bench, 1 + i as u32, r as u64),
                    );
                    let t = Instant::now();
                    black_box(equidistant_sup(&params, &mut rs, n)?);
                    t.elapsed().as_secs_f64()
                }
            };
            out.push(((reference - values[i]).abs(), elapsed));
        }
        Ok(out)
    })?;

    Ok(sweep
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let errs: Vec<f64> = per_rep.iter().map(|row| row[i].0).collect();
            let times: Vec<f64> = per_rep.iter().map(|row| row[i].1).collect();
            let (error, error_hw) = mean_hw(&errs);
            let (time_sec, time_hw) = mean_hw(&times);
            BenchRecord {
                sweep: n as f64,
                engine: cfg.engine,
                eta: params.eta(),
                gamma: params.gamma(),
                q: None,
                error,
                error_hw,
                time_sec,
                time_hw,
            }
        })
        .collect())
}

/// Seed of replication `r` at sweep point `e`.
pub fn replication_seed(master: u64, e: usize, r: usize) -> u64 {
    // splitmix64 finalizer over a combined key
    let key = (((e as u64) << 32) | r as u64).wrapping_add(1);
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(key));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Quantile error and per-call time for each `epsilon` in the sweep.
///
/// Replications are spread over the pool; each call runs single-threaded
/// so its wall time is a per-call cost.
pub fn bench_quantile(cfg: &QuantileBench, exec: Execution) -> Result<Vec<BenchRecord>> {
    cfg.params.ensure_finite_supremum()?;
    check_replications(cfg.replications)?;
    if !cfg.reference.is_finite() {
        return Err(Error::Config("quantile benchmark needs a finite reference value".into()));
    }
    let mut eps = cfg.epsilons.clone();
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("epsilon sweep must be a nonempty list of positive values".into()));
    }
    eps.sort_by(f64::total_cmp);
    eps.dedup();

    let mut records = Vec::with_capacity(eps.len());
    for (e, &epsilon) in eps.iter().enumerate() {
        let runs = exec.map_indexed(cfg.replications, |r| {
            let mut req = QuantileRequest::new(cfg.params, cfg.q, epsilon, replication_seed(cfg.seed, e, r))
                .with_engine(cfg.engine);
            req.calibration = cfg.calibration.clone();
            let res = compute_quantile_serial(&req)?;
            Ok(((res.quantile - cfg.reference).abs(), res.elapsed_sec))
        })?;
        let errs: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let times: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let (error, error_hw) = mean_hw(&errs);
        let (time_sec, time_hw) = mean_hw(&times);
        records.push(BenchRecord {
            sweep: epsilon,
            engine: cfg.engine,
            eta: cfg.params.eta(),
            gamma: cfg.params.gamma(),
            q: Some(cfg.q),
            error,
            error_hw,
            time_sec,
            time_hw,
        });
    }
    Ok(records)
}

/// Regressor for [`estimate_order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Sweep,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares slope of `log(error)` against `log(sweep)` or `log(time)`.
pub fn estimate_order(records: &[BenchRecord], axis: Axis) -> Result<OrderFit> {
    if records.len() < 4 {
        return Err(Error::InsufficientSamples(format!(
            "order estimate needs at least 4 records, got {}",
            records.len()
        )));
    }
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::with_capacity(records.len());
    for r in records {
        let x = match axis {
            Axis::Sweep => r.sweep,
            Axis::Time => r.time_sec,
        };
        if !(x > 0.0 && r.error > 0.0) {
            return Err(Error::Data(format!(
                "order estimate needs positive values, got x = {x}, error = {}",
                r.error
            )));
        }
        xs.push(x.ln());
        ys.push(r.error.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * n {
        return Err(Error::Data("degenerate sweep: all regressor values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(OrderFit { slope, stderr, intercept, points: records.len() })
}

pub fn write_records<W: Write>(w: W, records: &[BenchRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    if records.is_empty() {
        out.write_record(["sweep", "engine", "eta", "gamma", "q", "error", "error_hw", "time_sec", "time_hw"])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_records_to_path(path: &Path, records: &[BenchRecord]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_records(std::io::BufWriter::new(f), records)
}

pub fn read_records_from_path(path: &Path) -> Result<Vec<BenchRecord>> {
    read_records(std::fs::File::open(path)?)
}

/// `strong_<engine>_eta<eta>_gamma<gamma>.csv` or `quantile_...`.
pub fn record_file_name(kind: &str, engine: Engine, params: &WeightParams) -> String {
    format!("{kind}_{engine}_eta{}_gamma{}.csv", params.eta(), params.gamma())
}
