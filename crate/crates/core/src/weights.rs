//! The weight family `w(t) = 1_{]eta, 1-eta[}(t) * (t(1-t))^(-gamma)` and the
//! interval weight used by the greedy score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters `(eta, gamma)` of the weight function.
///
/// `0 <= eta < 1/2`, `0 <= gamma <= 1/2`. The pair `(0, 1/2)` is rejected by
/// [`WeightParams::new`] because `sup w|B|` is almost surely infinite there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    eta: f64,
    gamma: f64,
}

impl WeightParams {
    pub fn new(eta: f64, gamma: f64) -> Result<Self> {
        let p = Self::new_unrestricted(eta, gamma)?;
        p.ensure_finite_supremum()?;
        Ok(p)
    }

    /// Like [`WeightParams::new`] but admits `(0, 1/2)`.
    ///
    /// Only meaningful for evaluating the CUSUM statistic itself (the
    /// Darling–Erdős setting); the Monte Carlo routines refuse it.
    pub fn new_unrestricted(eta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::InvalidParams(format!("eta must lie in [0, 1/2), got {eta}")));
        }
        if !(0.0..=0.5).contains(&gamma) {
            return Err(Error::InvalidParams(format!("gamma must lie in [0, 1/2], got {gamma}")));
        }
        Ok(Self { eta, gamma })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn has_finite_supremum(&self) -> bool {
        !(self.eta == 0.0 && self.gamma == 0.5)
    }

    pub(crate) fn ensure_finite_supremum(&self) -> Result<()> {
        if self.has_finite_supremum() {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "(eta, gamma) = (0, 1/2) is excluded: the weighted supremum of the reflecting \
                 Brownian bridge is almost surely infinite for this pair; use the Darling-Erdos \
                 critical value instead"
                    .into(),
            ))
        }
    }

    /// `w(t)` for `0 < t < 1`. Zero at `t <= eta` and `t >= 1 - eta`.
    pub fn weight(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("weight: need 0 < t < 1, got {t}")));
        }
        Ok(self.weight_at(t))
    }

    #[inline]
    pub(crate) fn weight_at(&self, t: f64) -> f64 {
        if t <= self.eta || t >= 1.0 - self.eta {
            0.0
        } else {
            self.core(t)
        }
    }

    /// `v(l, r)`: zero if `[l, r]` lies inside `[0, eta] ∪ [1-eta, 1]`,
    /// otherwise `(c(1-c))^(-gamma)` at the midpoint `c`, even if `w(c) = 0`.
    pub fn interval_weight(&self, iv: Interval) -> f64 {
        self.interval_weight_at(iv.lo, iv.hi)
    }

    #[inline]
    pub(crate) fn interval_weight_at(&self, lo: f64, hi: f64) -> f64 {
        if hi <= self.eta || lo >= 1.0 - self.eta {
            0.0
        } else {
            self.core(0.5 * (lo + hi))
        }
    }

    /// `w(index / 2^level)`, evaluated from the exact distance to the nearer
    /// end point so that points close to `1` keep full relative precision.
    ///
    /// Requires `0 < index < 2^level` and `level <= 127`.
    pub fn dyadic_weight(&self, index: u128, level: u32) -> f64 {
        self.weight_from_dist(dyadic_dist(index, level))
    }

    /// `w` at a point whose distance to the nearer of `0` and `1` is `d`.
    #[inline]
    pub(crate) fn weight_from_dist(&self, d: f64) -> f64 {
        if d <= self.eta {
            0.0
        } else {
            self.core(d)
        }
    }

    /// `v` for `[index, index + 1] / 2^level`; same convention as
    /// [`WeightParams::interval_weight`].
    #[inline]
    pub(crate) fn dyadic_interval_weight(&self, index: u128, level: u32) -> f64 {
        if self.eta > 0.0 {
            let hi = ldexp_u128(index + 1, level);
            let lo_to_end = ldexp_u128((1u128 << level) - index, level);
            if hi <= self.eta || lo_to_end <= self.eta {
                return 0.0;
            }
        }
        self.core(dyadic_dist(2 * index + 1, level + 1))
    }

    // symmetric in t <-> 1-t, so d = min(t, 1-t) may be passed for t
    #[inline]
    fn core(&self, t: f64) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else {
            (t * (1.0 - t)).powf(-self.gamma)
        }
    }
}

/// `k * 2^-level` without intermediate rounding beyond the conversion of `k`.
#[inline]
pub(crate) fn ldexp_u128(k: u128, level: u32) -> f64 {
    k as f64 * f64::powi(2.0, -(level as i32))
}

/// `min(t, 1 - t)` for `t = index / 2^level`.
#[inline]
pub(crate) fn dyadic_dist(index: u128, level: u32) -> f64 {
    let full = 1u128 << level;
    ldexp_u128(index.min(full - index), level)
}

/// A closed subinterval `[lo, hi]` of `[0, 1]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}
