//! Quantiles of `S(w|B|)` from order statistics of simulated suprema.
//!
//! The pipeline has two phases. A precompute phase picks the refinement level
//! `n0 = 10 * 2^i`: the smallest one whose mean coupled difference
//! `|A_2n - A_n|` over `m` fresh trajectories is at most `epsilon`. Then
//! `k0 = ceil(epsilon^-2)` new, independent samples of `A_n0` are drawn and
//! the `ceil(q * k0)`-th order statistic is returned, together with a
//! distribution-free confidence interval from binomial order-statistic
//! coverage.
//!
//! Every sample is drawn from its own [`RandomStream`], keyed by phase,
//! level and replication, so results do not depend on the worker count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::sampler::{stream_index, RandomStream, StreamPurpose};
use crate::sup_approx::{adaptive_sup, adaptive_sup_value, equidistant_sup};
use crate::weights::WeightParams;

/// Number of coupled differences averaged per candidate level.
pub const DEFAULT_PRECOMPUTE_SAMPLES: usize = 1_000;
/// Candidate levels `i = 0..=20`, i.e. `n0` up to about `10^7`.
pub const DEFAULT_I_MAX: u32 = 20;
pub const DEFAULT_CI_LEVEL: f64 = 0.95;
/// Smallest candidate refinement level.
pub const BASE_LEVEL: usize = 10;

/// Path discretization used as the building block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Adaptive,
    Equidistant,
}

impl Engine {
    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Adaptive => "adaptive",
            Engine::Equidistant => "equidistant",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Engine::Adaptive),
            "equidistant" => Ok(Engine::Equidistant),
            other => Err(Error::Config(format!(
                "unknown engine '{other}' (expected adaptive or equidistant)"
            ))),
        }
    }
}

/// Whether independent replications are spread over the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

impl Execution {
    pub(crate) fn map_indexed<T, F>(self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        match self {
            Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
            Execution::Serial => (0..count).map(f).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantileRequest {
    pub params: WeightParams,
    pub q: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub engine: Engine,
    pub ci_level: f64,
    /// `m`, the number of coupled differences per candidate level.
    pub precompute_samples: usize,
    pub i_max: u32,
    /// Error table for the equidistant engine; the built-in table for the
    /// parameters is used when absent.
    pub calibration: Option<Calibration>,
}

impl QuantileRequest {
    pub fn new(params: WeightParams, q: f64, epsilon: f64, seed: u64) -> Self {
        Self {
            params,
            q,
            epsilon,
            seed,
            engine: Engine::Adaptive,
            ci_level: DEFAULT_CI_LEVEL,
            precompute_samples: DEFAULT_PRECOMPUTE_SAMPLES,
            i_max: DEFAULT_I_MAX,
            calibration: None,
        }
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    fn validate(&self) -> Result<()> {
        self.params.ensure_finite_supremum()?;
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Domain(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Domain(format!("ci level must lie in (0, 1), got {}", self.ci_level)));
        }
        if self.precompute_samples == 0 {
            return Err(Error::Domain("precompute sample count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileResult {
    pub quantile: f64,
    pub n0: usize,
    pub k0: usize,
    /// Order-statistic confidence interval; `None` when `k0` is too small for
    /// any interval to reach the requested level.
    pub ci: Option<(f64, f64)>,
    pub order_index: usize,
    pub elapsed_sec: f64,
    pub seed: u64,
    /// Mean coupled difference at each candidate level tried (adaptive only).
    pub precompute_trace: Vec<(usize, f64)>,
}

impl QuantileResult {
    /// Equality of everything except the wall-clock time.
    pub fn same_estimate(&self, other: &Self) -> bool {
        let bits = |ci: Option<(f64, f64)>| ci.map(|(a, b)| (a.to_bits(), b.to_bits()));
        self.quantile.to_bits() == other.quantile.to_bits()
            && self.n0 == other.n0
            && self.k0 == other.k0
            && bits(self.ci) == bits(other.ci)
            && self.order_index == other.order_index
            && self.seed == other.seed
            && self.precompute_trace.len() == other.precompute_trace.len()
            && self
                .precompute_trace
                .iter()
                .zip(&other.precompute_trace)
                .all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits())
    }
}

/// `ceil(epsilon^-2)`, computed so that exact squares are not pushed one
/// past by rounding: the result is the least `k` with `k * epsilon^2 >= 1`.
pub fn sample_count(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let e2 = epsilon * epsilon;
    let approx = (1.0 / e2).ceil();
    if approx > 1e15 {
        return Err(Error::Domain(format!("epsilon {epsilon} needs too many samples")));
    }
    let mut k = (approx as usize).max(1);
    while k > 1 && (k - 1) as f64 * e2 >= 1.0 {
        k -= 1;
    }
    while (k as f64) * e2 < 1.0 {
        k += 1;
    }
    Ok(k)
}

/// `ceil(q * k)`, clamped to `1..=k`. Products within `1e-9` relative of an
/// integer snap to it, so `0.95 * 20` is 19 and not 20.
pub fn order_index(q: f64, k: usize) -> usize {
    let x = q * k as f64;
    let r = x.round();
    let idx = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (idx as usize).clamp(1, k.max(1))
}

/// Value of 1-based rank `index` in ascending order.
///
/// Selection in place with expected linear cost; `samples` is permuted.
pub fn order_statistic(samples: &mut [f64], index: usize) -> Result<f64> {
    if index == 0 || index > samples.len() {
        return Err(Error::Domain(format!(
            "order statistic index {index} outside 1..={}",
            samples.len()
        )));
    }
    let (_, v, _) = samples.select_nth_unstable_by(index - 1, f64::total_cmp);
    Ok(*v)
}

/// Ranks `(a, b)` of a conservative level `1 - alpha` confidence interval
/// `[Y_(a), Y_(b)]` for the `q`-quantile from `k` iid samples.
///
/// With `Z ~ Binomial(k, q)`, `a` is the largest rank with `P(Z < a) <= alpha/2`
/// and `b` the smallest with `P(Z >= b) <= alpha/2`, so
/// `P(a <= Z <= b-1) >= 1 - alpha`.
pub fn binomial_ci_indices(k: usize, q: f64, alpha: f64) -> Result<(usize, usize)> {
    if !(q > 0.0 && q < 1.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("binomial_ci: need 0 < q, alpha < 1 (q = {q}, alpha = {alpha})")));
    }
    if k == 0 {
        return Err(Error::InsufficientSamples("no samples".into()));
    }
    let z = Binomial::new(q, k as u64).map_err(|e| Error::Domain(e.to_string()))?;
    let half = 0.5 * alpha;
    // P(Z < a) = cdf(a - 1), nondecreasing in a
    let lower_ok = |a: usize| a == 0 || z.cdf(a as u64 - 1) <= half;
    // P(Z >= b) = sf(b - 1), nonincreasing in b
    let upper_ok = |b: usize| z.sf(b as u64 - 1) <= half;

    let (mut lo, mut hi) = (0usize, k);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if lower_ok(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let a = lo;

    let (mut lo, mut hi) = (1usize, k + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if upper_ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let b = lo;

    if a == 0 || b > k || a >= b {
        return Err(Error::InsufficientSamples(format!(
            "{k} samples cannot give a level {} interval for the {q}-quantile",
            1.0 - alpha
        )));
    }
    Ok((a, b))
}

/// `[Y_(a), Y_(b)]` with ranks from [`binomial_ci_indices`]; `samples` is
/// permuted.
pub fn binomial_ci(samples: &mut [f64], q: f64, alpha: f64) -> Result<(f64, f64)> {
    let (a, b) = binomial_ci_indices(samples.len(), q, alpha)?;
    let lo = order_statistic(samples, a)?;
    let hi = order_statistic(samples, b)?;
    Ok((lo, hi))
}

/// Outcome of the precompute phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Precompute {
    pub n0: usize,
    /// `(n, mean |A_2n - A_n|)` for each level tried.
    pub trace: Vec<(usize, f64)>,
}

/// Smallest `n0 = 10 * 2^i`, `i <= i_max`, whose mean coupled difference
/// over `m` fresh trajectories is at most `epsilon`.
pub fn precompute_n0(
    params: &WeightParams,
    seed: u64,
    epsilon: f64,
    m: usize,
    i_max: u32,
    exec: Execution,
) -> Result<Precompute> {
    params.ensure_finite_supremum()?;
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if m == 0 {
        return Err(Error::Domain("precompute needs m >= 1".into()));
    }
    let mut trace = Vec::new();
    for i in 0..=i_max {
        let n = BASE_LEVEL << i;
        let deltas = exec.map_indexed(m, |j| {
            let mut rs = RandomStream::new(seed, stream_index(StreamPurpose::Precompute, i, j as u64));
            let run = adaptive_sup(params, &mut rs, 2 * n, &[n])?;
            Ok((run.value - run.checkpoints[0].1).abs())
        })?;
        let mean = deltas.iter().sum::<f64>() / m as f64;
        trace.push((n, mean));
        if mean <= epsilon {
            return Ok(Precompute { n0: n, trace });
        }
    }
    let &(last_n, last_estimate) = trace.last().expect("at least one level");
    Err(Error::PrecomputeDivergence { i_max, epsilon, last_n, last_estimate })
}

/// Run the full quantile pipeline on the current rayon pool.
pub fn compute_quantile(req: &QuantileRequest) -> Result<QuantileResult> {
    compute_quantile_with(req, Execution::Parallel)
}

/// Run the full quantile pipeline on the calling thread only.
pub fn compute_quantile_serial(req: &QuantileRequest) -> Result<QuantileResult> {
    compute_quantile_with(req, Execution::Serial)
}

pub fn compute_quantile_with(req: &QuantileRequest, exec: Execution) -> Result<QuantileResult> {
    req.validate()?;
    let k0 = sample_count(req.epsilon)?;
    let calibration = match req.engine {
        Engine::Equidistant => Some(match &req.calibration {
            Some(c) => c.clone(),
            None => Calibration::builtin(&req.params).ok_or_else(|| {
                Error::Config(format!(
                    "no equidistant error table for eta = {}, gamma = {}; generate one with a \
                     strong equidistant benchmark and pass it as calibration",
                    req.params.eta(),
                    req.params.gamma()
                ))
            })?,
        }),
        Engine::Adaptive => None,
    };

    let start = Instant::now();
    let (n0, trace) = match (req.engine, calibration) {
        (Engine::Adaptive, _) => {
            let pre = precompute_n0(
                &req.params,
                req.seed,
                req.epsilon,
                req.precompute_samples,
                req.i_max,
                exec,
            )?;
            (pre.n0, pre.trace)
        }
        (Engine::Equidistant, Some(cal)) => (cal.n0_for(req.epsilon), Vec::new()),
        (Engine::Equidistant, None) => unreachable!(),
    };

    let params = req.params;
    let engine = req.engine;
    let mut samples = exec.map_indexed(k0, |j| {
        let mut rs = RandomStream::new(req.seed, stream_index(StreamPurpose::Sampling, 0, j as u64));
        match engine {
            Engine::Adaptive => adaptive_sup_value(&params, &mut rs, n0),
            Engine::Equidistant => equidistant_sup(&params, &mut rs, n0),
        }
    })?;

    let idx = order_index(req.q, k0);
    let quantile = order_statistic(&mut samples, idx)?;
    let ci = match binomial_ci(&mut samples, req.q, 1.0 - req.ci_level) {
        Ok(ci) => Some(ci),
        Err(Error::InsufficientSamples(_)) => None,
        Err(e) => return Err(e),
    };
    let elapsed_sec = start.elapsed().as_secs_f64();

    Ok(QuantileResult {
        quantile,
        n0,
        k0,
        ci,
        order_index: idx,
        elapsed_sec,
        seed: req.seed,
        precompute_trace: trace,
    })
}
