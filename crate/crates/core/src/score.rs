//! Greedy score for choosing which subinterval to split next.
//!
//! For `[l, r]` with bridge values `x = B(l)`, `y = B(r)` and current discrete
//! maximum `m`, the score is the expected exceedance
//! `E((v Z - m)^+) + E((v Z + m)^-)` with `Z ~ N((x+y)/2, (r-l)/4)` and
//! `v = v(l, r)` the interval weight. In closed form
//!
//! ```text
//! v * sqrt(r-l)/2 * ( psi((x+y-2m/v)/sqrt(r-l)) + psi(-(x+y+2m/v)/sqrt(r-l)) )
//! ```
//!
//! Production scoring replaces `psi` by its tail-stabilized `psi_tilde`.

use crate::reference_math::{psi, psi_tilde};
use crate::weights::{Interval, WeightParams};

/// Arguments of the score: an interval, the bridge values at its ends and the
/// current discrete maximum `m >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreInputs {
    pub iv: Interval,
    pub x: f64,
    pub y: f64,
    pub m: f64,
}

/// Which `psi` the closed form is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiVariant {
    #[default]
    Stabilized,
    /// The unmodified `psi`; kept for comparison against quadrature.
    Exact,
}

pub fn score(p: &WeightParams, s: &ScoreInputs) -> f64 {
    score_at(p, s.iv.lo, s.iv.hi, s.x, s.y, s.m)
}

pub fn score_with(p: &WeightParams, s: &ScoreInputs, variant: PsiVariant) -> f64 {
    match variant {
        PsiVariant::Stabilized => score(p, s),
        PsiVariant::Exact => closed_form(p, s.iv.lo, s.iv.hi, s.x, s.y, s.m, psi),
    }
}

/// The two `psi` arguments of the closed form, or `None` when `v(l, r) = 0`.
pub fn psi_arguments(p: &WeightParams, s: &ScoreInputs) -> Option<(f64, f64)> {
    let v = p.interval_weight(s.iv);
    if v == 0.0 {
        return None;
    }
    let h = s.iv.len().sqrt();
    let sum = s.x + s.y;
    let shift = 2.0 * s.m / v;
    Some(((sum - shift) / h, -(sum + shift) / h))
}

#[inline]
pub(crate) fn score_at(p: &WeightParams, lo: f64, hi: f64, x: f64, y: f64, m: f64) -> f64 {
    closed_form(p, lo, hi, x, y, m, psi_tilde)
}

/// Score from a precomputed interval weight `v` and length `len`.
#[inline]
pub(crate) fn score_parts(v: f64, len: f64, x: f64, y: f64, m: f64) -> f64 {
    evaluate(v, len, x, y, m, psi_tilde)
}

#[inline]
fn closed_form(
    p: &WeightParams,
    lo: f64,
    hi: f64,
    x: f64,
    y: f64,
    m: f64,
    psi_fn: impl Fn(f64) -> f64,
) -> f64 {
    evaluate(p.interval_weight_at(lo, hi), hi - lo, x, y, m, psi_fn)
}

#[inline]
fn evaluate(v: f64, len: f64, x: f64, y: f64, m: f64, psi_fn: impl Fn(f64) -> f64) -> f64 {
    // m >= 0, so nothing can exceed it where v vanishes
    if v == 0.0 {
        return 0.0;
    }
    let h = len.sqrt();
    let sum = x + y;
    let shift = 2.0 * m / v;
    let total = psi_fn((sum - shift) / h) + psi_fn(-(sum + shift) / h);
    (0.5 * v * h * total).max(0.0)
}
