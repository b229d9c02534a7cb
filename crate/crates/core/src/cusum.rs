//! Weighted CUSUM statistic and the asymptotic level-alpha change-point test.
//!
//! Model: `xi_i = eps_i` for `i <= m` and `d + eps_i` for `i > m`, with iid
//! centered errors of standard deviation `sigma`. Under `H0` (no change) the
//! statistic `T_n(w) / sigma` converges in law to `sup w|B|`.
//!
//! With `T_{k,n} = S_k - (k/n) S_n` the test rejects iff some `k` with
//! `eta n < k < (1-eta) n` has
//! `|T_{k,n}| / sqrt(n) > sigma c (k/n (1-k/n))^gamma`.

use std::io::{BufRead, Read};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantile::{compute_quantile, Engine, QuantileRequest};
use crate::reference_math::{darling_erdos_critical, kolmogorov_quantile, DarlingErdosVariant};
use crate::sampler::NormalSource;
use crate::weights::WeightParams;

/// An observed series with its error standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSample {
    observations: Vec<f64>,
    sigma: f64,
    sigma_estimated: bool,
}

impl SeriesSample {
    pub fn new(observations: Vec<f64>, sigma: f64) -> Result<Self> {
        check_observations(&observations)?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { observations, sigma, sigma_estimated: false })
    }

    /// Uses [`estimate_sigma`] for the error standard deviation.
    pub fn with_estimated_sigma(observations: Vec<f64>) -> Result<Self> {
        check_observations(&observations)?;
        let sigma = estimate_sigma(&observations)?;
        Ok(Self { observations, sigma, sigma_estimated: true })
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma_estimated(&self) -> bool {
        self.sigma_estimated
    }
}

fn check_observations(xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::Data(format!("need at least 2 observations, got {}", xs.len())));
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::Data(format!("observation {} is not finite", i + 1)));
    }
    Ok(())
}

/// `sqrt(sum (xi_{i+1} - xi_i)^2 / (2 (n-1)))`.
///
/// Differencing removes the level, so a single mean shift only adds one
/// term of order `d^2 / n`.
pub fn estimate_sigma(xs: &[f64]) -> Result<f64> {
    check_observations(xs)?;
    let ss: f64 = xs.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let s = (ss / (2.0 * (xs.len() - 1) as f64)).sqrt();
    if !(s > 0.0) {
        return Err(Error::Data("cannot estimate sigma: the series has no variation".into()));
    }
    Ok(s)
}

/// `T_{k,n}` for `k = 1..n-1`, from one prefix-sum pass.
pub fn cusum_partials(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 2 {
        return Vec::new();
    }
    // T is shift invariant; anchoring at xs[0] keeps a constant series exactly 0
    let x0 = xs[0];
    let mut prefix = Vec::with_capacity(n);
    let mut s = 0.0;
    for &x in xs {
        s += x - x0;
        prefix.push(s);
    }
    let total = prefix[n - 1];
    let nf = n as f64;
    (1..n).map(|k| prefix[k - 1] - (k as f64 / nf) * total).collect()
}

/// `T_{k,n} = S_k - (k/n) S_n` for `1 <= k < n`.
pub fn cusum_partial(xs: &[f64], k: usize) -> Result<f64> {
    let n = xs.len();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("cusum_partial: need 1 <= k < n = {n}, got k = {k}")));
    }
    let x0 = xs[0];
    let total: f64 = xs.iter().map(|x| x - x0).sum();
    let sk: f64 = xs[..k].iter().map(|x| x - x0).sum();
    Ok(sk - (k as f64 / n as f64) * total)
}

/// `eta n < k < (1-eta) n`.
#[inline]
fn in_window(params: &WeightParams, k: usize, n: usize) -> bool {
    let (k, n) = (k as f64, n as f64);
    let eta = params.eta();
    k > eta * n && k < (1.0 - eta) * n
}

/// `(k/n (1-k/n))^-gamma` inside the window, `0` outside.
fn weight_k(params: &WeightParams, k: usize, n: usize) -> f64 {
    if !in_window(params, k, n) {
        return 0.0;
    }
    let t = k as f64 / n as f64;
    if params.gamma() == 0.0 {
        1.0
    } else {
        (t * (1.0 - t)).powf(-params.gamma())
    }
}

/// `T_n(w) = max_k w(k/n) |T_{k,n}| / sqrt(n)` and the first maximizing `k`
/// (`None` when no `k` lies in the window).
pub fn cusum_statistic_argmax(xs: &[f64], params: &WeightParams) -> (f64, Option<usize>) {
    let n = xs.len();
    let root_n = (n as f64).sqrt();
    let mut best = (0.0, None);
    for (i, t) in cusum_partials(xs).into_iter().enumerate() {
        let k = i + 1;
        let w = weight_k(params, k, n);
        if w == 0.0 {
            continue;
        }
        let v = w * t.abs() / root_n;
        if best.1.is_none() || v > best.0 {
            best = (v, Some(k));
        }
    }
    best
}

pub fn cusum_statistic(xs: &[f64], params: &WeightParams) -> f64 {
    cusum_statistic_argmax(xs, params).0
}

/// Where the critical value comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CriticalSource {
    /// Monte Carlo `(1-alpha)`-quantile of `sup w|B|`.
    MonteCarlo { epsilon: f64, seed: u64, engine: Engine },
    /// Extreme-value limit, only for `eta = 0`, `gamma = 1/2`.
    DarlingErdos(DarlingErdosVariant),
    /// Kolmogorov distribution, only for `eta = 0`, `gamma = 0`.
    Kolmogorov,
}

impl CriticalSource {
    pub fn name(&self) -> &'static str {
        match self {
            CriticalSource::MonteCarlo { .. } => "monte-carlo",
            CriticalSource::DarlingErdos(_) => "darling-erdos",
            CriticalSource::Kolmogorov => "kolmogorov",
        }
    }
}

/// Critical value on the `sigma = 1` scale for a series of length `n`.
pub fn critical_value(source: &CriticalSource, params: &WeightParams, alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    match source {
        CriticalSource::Kolmogorov => {
            if params.eta() != 0.0 || params.gamma() != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "the kolmogorov critical value requires eta = 0 and gamma = 0 (got eta = {}, gamma = {})",
                    params.eta(),
                    params.gamma()
                )));
            }
            kolmogorov_quantile(1.0 - alpha)
        }
        CriticalSource::DarlingErdos(variant) => {
            if params.eta() != 0.0 || params.gamma() != 0.5 {
                return Err(Error::InvalidParams(format!(
                    "the darling-erdos critical value requires eta = 0 and gamma = 1/2 (got eta = {}, gamma = {})",
                    params.eta(),
                    params.gamma()
                )));
            }
            darling_erdos_critical(n as u64, alpha, 1.0, *variant)
        }
        CriticalSource::MonteCarlo { epsilon, seed, engine } => {
            let req = QuantileRequest::new(*params, 1.0 - alpha, *epsilon, *seed).with_engine(*engine);
            Ok(compute_quantile(&req)?.quantile)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    /// `T_n(w) / sigma`.
    pub statistic: f64,
    /// `T_n(w)`.
    pub raw_statistic: f64,
    /// On the scale of `statistic`.
    pub critical_value: f64,
    pub reject: bool,
    pub argmax_k: Option<usize>,
    pub n: usize,
    pub sigma: f64,
    pub sigma_estimated: bool,
    /// `w(k/n) |T_{k,n}| / (sigma sqrt(n))` for `k = 1..n-1`, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_k: Option<Vec<f64>>,
}

/// Apply the rejection rule with a `sigma = 1` critical value `c`.
pub fn decide(series: &SeriesSample, params: &WeightParams, c: f64) -> Result<TestOutcome> {
    decide_inner(series, params, c, false)
}

/// Like [`decide`] and also returns the per-`k` weighted values.
pub fn decide_with_trace(series: &SeriesSample, params: &WeightParams, c: f64) -> Result<TestOutcome> {
    decide_inner(series, params, c, true)
}

fn decide_inner(series: &SeriesSample, params: &WeightParams, c: f64, trace: bool) -> Result<TestOutcome> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("critical value must be finite and nonnegative, got {c}")));
    }
    let xs = series.observations();
    let n = xs.len();
    let sigma = series.sigma();
    let root_n = (n as f64).sqrt();
    let partials = cusum_partials(xs);
    let mut reject = false;
    for (i, t) in partials.iter().enumerate() {
        let k = i + 1;
        if !in_window(params, k, n) {
            continue;
        }
        let u = k as f64 / n as f64;
        if t.abs() / root_n > sigma * c * (u * (1.0 - u)).powf(params.gamma()) {
            reject = true;
            break;
        }
    }
    let (raw, argmax_k) = cusum_statistic_argmax(xs, params);
    let per_k = trace.then(|| {
        partials
            .iter()
            .enumerate()
            .map(|(i, t)| weight_k(params, i + 1, n) * t.abs() / (root_n * sigma))
            .collect()
    });
    Ok(TestOutcome {
        statistic: raw / sigma,
        raw_statistic: raw,
        critical_value: c,
        reject,
        argmax_k,
        n,
        sigma,
        sigma_estimated: series.sigma_estimated(),
        per_k,
    })
}

/// Critical value from `source`, then [`decide`].
pub fn run_test(
    series: &SeriesSample,
    params: &WeightParams,
    alpha: f64,
    source: &CriticalSource,
) -> Result<TestOutcome> {
    let c = critical_value(source, params, alpha, series.len())?;
    decide(series, params, c)
}

/// `(t, sigma c (t(1-t))^gamma)` at `t = i/(points+1)` inside `]eta, 1-eta[`:
/// the rejection boundary for `|T_{k,n}| / sqrt(n)` at `t = k/n`.
pub fn threshold_curve(params: &WeightParams, c: f64, sigma: f64, points: usize) -> Vec<(f64, f64)> {
    let denom = (points + 1) as f64;
    (1..=points)
        .map(|i| i as f64 / denom)
        .filter(|&t| t > params.eta() && t < 1.0 - params.eta())
        .map(|t| (t, sigma * c * (t * (1.0 - t)).powf(params.gamma())))
        .collect()
}

/// `n` observations with iid `N(0, sigma^2)` errors and, optionally, a mean
/// shift of `d` after observation `m`.
pub fn simulate_series<S: NormalSource + ?Sized>(
    src: &mut S,
    n: usize,
    sigma: f64,
    change: Option<(usize, f64)>,
) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let shift = match change {
                Some((m, d)) if i > m => d,
                _ => 0.0,
            };
            shift + sigma * src.std_normal()
        })
        .collect()
}

/// One number per line; blank lines are skipped.
pub fn read_plain<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Data(format!("line {}: cannot parse '{s}' as a number", i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

/// Column of a headed CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    /// Digits select by 0-based index, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

pub fn read_csv_column<R: Read>(r: R, column: &Column) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    let idx = match column {
        Column::Index(i) if *i < headers.len() => *i,
        Column::Index(i) => {
            return Err(Error::Data(format!("column index {i} out of range ({} columns)", headers.len())))
        }
        Column::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("no column named '{name}'")))?,
    };
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("row {}: {e}", row + 2)))?;
        let field = rec
            .get(idx)
            .ok_or_else(|| Error::Data(format!("row {}: missing column {idx}", row + 2)))?;
        if field.is_empty() && rec.iter().all(str::is_empty) {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Data(format!("row {}: cannot parse '{field}' as a number", row + 2)))?;
        out.push(v);
    }
    Ok(out)
}
