//! Seedable random streams and exact conditional sampling of a Brownian
//! bridge pinned at `B(0) = B(1) = 0`.
//!
//! A [`RandomStream`] is a ChaCha8 generator keyed by `(seed, stream)`.
//! Every Monte Carlo replication owns the stream for its own index, so the
//! numbers it sees do not depend on how work is scheduled across threads.

use std::f64::consts::SQRT_2;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::weights::Interval;

/// Anything that can hand out standard normal variates.
///
/// The simulation routines are generic over this so tests can script the
/// draws.
pub trait NormalSource {
    fn std_normal(&mut self) -> f64;
}

/// Deterministic random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on the open interval `(0, 1)`, on a grid of spacing `2^-53`.
    #[inline]
    pub fn open_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl NormalSource for RandomStream {
    /// Inverse-CDF transform of one open uniform.
    #[inline]
    fn std_normal(&mut self) -> f64 {
        let u = self.open_uniform();
        -SQRT_2 * erfc_inv(2.0 * u)
    }
}

/// One standard normal draw.
pub fn sample_std_normal<S: NormalSource + ?Sized>(rs: &mut S) -> f64 {
    rs.std_normal()
}

/// What a stream is used for; keeps the index ranges of different phases
/// disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Final samples of the quantile algorithm.
    Sampling = 0,
    /// Coupled differences while searching for the refinement level.
    Precompute = 1,
    /// Benchmark replications.
    Bench = 2,
    /// Anything else (tests, simulated data).
    Auxiliary = 3,
}

const LEVEL_BITS: u32 = 22;
const REPLICATION_BITS: u32 = 40;

/// Stream index for `(purpose, level, replication)`.
///
/// Bits 62..64 hold the purpose, 40..62 the level, 0..40 the replication.
pub fn stream_index(purpose: StreamPurpose, level: u32, replication: u64) -> u64 {
    debug_assert!(level < (1 << LEVEL_BITS));
    debug_assert!(replication < (1 << REPLICATION_BITS));
    ((purpose as u64) << (LEVEL_BITS + REPLICATION_BITS))
        | ((level as u64) << REPLICATION_BITS)
        | replication
}

/// Draw `B(c)`, `c` the midpoint of `iv`, given `B(lo) = x` and `B(hi) = y`:
/// normal with mean `(x+y)/2` and variance `(hi-lo)/4`.
#[inline]
pub fn bridge_midpoint<S: NormalSource + ?Sized>(rs: &mut S, iv: Interval, x: f64, y: f64) -> f64 {
    midpoint_value(rs, iv.lo, iv.hi, x, y)
}

#[inline]
pub(crate) fn midpoint_value<S: NormalSource + ?Sized>(
    rs: &mut S,
    lo: f64,
    hi: f64,
    x: f64,
    y: f64,
) -> f64 {
    midpoint_from_len(rs, hi - lo, x, y)
}

#[inline]
pub(crate) fn midpoint_from_len<S: NormalSource + ?Sized>(rs: &mut S, len: f64, x: f64, y: f64) -> f64 {
    0.5 * (x + y) + 0.5 * len.sqrt() * rs.std_normal()
}

/// Draw `B(t)` given `B(s) = x` for the bridge pinned at `B(1) = 0`:
/// normal with mean `x (1-t)/(1-s)` and variance `(t-s)(1-t)/(1-s)`.
pub fn bridge_forward<S: NormalSource + ?Sized>(rs: &mut S, s: f64, t: f64, x: f64) -> Result<f64> {
    if !(0.0 <= s && s < t) {
        return Err(Error::Domain(format!("bridge_forward: need 0 <= s < t, got s = {s}, t = {t}")));
    }
    if t >= 1.0 {
        return Err(Error::Domain(format!(
            "bridge_forward: t = {t} must stay below the terminal pin at 1"
        )));
    }
    Ok(forward_value(rs, s, t, x))
}

#[inline]
pub(crate) fn forward_value<S: NormalSource + ?Sized>(rs: &mut S, s: f64, t: f64, x: f64) -> f64 {
    let ratio = (1.0 - t) / (1.0 - s);
    x * ratio + ((t - s) * ratio).sqrt() * rs.std_normal()
}

/// Replays a fixed list of normal variates; panics when exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedNormals {
    values: Vec<f64>,
    next: usize,
}

impl ScriptedNormals {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self { values: values.into(), next: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }
}

impl NormalSource for ScriptedNormals {
    fn std_normal(&mut self) -> f64 {
        let v = self.values[self.next];
        self.next += 1;
        v
    }
}
