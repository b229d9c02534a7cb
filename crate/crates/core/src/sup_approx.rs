//! Strong approximation of `S(w|B|) = sup_t w(t)|B(t)|`.
//!
//! [`AdaptiveRun`] is the greedy bisection scheme: the partition of `[0, 1]`
//! lives in a max-priority queue keyed by score, each step splits the top
//! interval at its midpoint and samples the bridge there. Scores are fixed
//! when an interval is created and never refreshed, so a step costs
//! `O(log k)`.
//!
//! [`equidistant_sup`] is the uniform-grid baseline.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::sampler::{forward_value, midpoint_from_len, NormalSource};
use crate::score::score_parts;
use crate::weights::{dyadic_dist, ldexp_u128, WeightParams};

/// Deepest level whose intervals may still be split. Every partition
/// element is a dyadic interval `[k, k + 1] / 2^level`; children created
/// below this level get score zero.
pub const MAX_SPLIT_LEVEL: u32 = 126;

/// One element of the partition: `[lo, hi]`, `B(lo) = x`, `B(hi) = y`, score `s`.
///
/// `lo = index / 2^level` and `hi = (index + 1) / 2^level` exactly; the `f64`
/// end points are rounded views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredInterval {
    pub lo: f64,
    pub hi: f64,
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub index: u128,
    pub level: u32,
}

// exact time representation; the f64 views are built on demand
#[derive(Debug, Clone, Copy)]
struct Cell {
    index: u128,
    level: u32,
    x: f64,
    y: f64,
    s: f64,
}

impl Cell {
    fn view(&self) -> ScoredInterval {
        ScoredInterval {
            lo: ldexp_u128(self.index, self.level),
            hi: ldexp_u128(self.index + 1, self.level),
            x: self.x,
            y: self.y,
            s: self.s,
            index: self.index,
            level: self.level,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    iv: Cell,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // higher score first; on ties the earlier insertion wins
    fn cmp(&self, other: &Self) -> Ordering {
        self.iv
            .s
            .total_cmp(&other.iv.s)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// State of the adaptive algorithm after `steps()` steps.
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    params: WeightParams,
    queue: BinaryHeap<Node>,
    m: f64,
    steps: usize,
    next_seq: u64,
}

impl AdaptiveRun {
    /// Step 1: the single interval `[0, 1]` with `B(0) = B(1) = 0` and `m = 0`.
    pub fn new(params: WeightParams) -> Result<Self> {
        Self::with_capacity(params, 16)
    }

    pub fn with_capacity(params: WeightParams, capacity: usize) -> Result<Self> {
        params.ensure_finite_supremum()?;
        let mut run = Self {
            params,
            queue: BinaryHeap::with_capacity(capacity.max(1)),
            m: 0.0,
            steps: 1,
            next_seq: 0,
        };
        let s = score_parts(params.dyadic_interval_weight(0, 0), 1.0, 0.0, 0.0, 0.0);
        run.push(Cell { index: 0, level: 0, x: 0.0, y: 0.0, s });
        Ok(run)
    }

    fn push(&mut self, iv: Cell) {
        self.queue.push(Node { iv, seq: self.next_seq });
        self.next_seq += 1;
    }

    fn child_score(&self, index: u128, level: u32, x: f64, y: f64) -> f64 {
        if level > MAX_SPLIT_LEVEL {
            0.0
        } else {
            let v = self.params.dyadic_interval_weight(index, level);
            score_parts(v, ldexp_u128(1, level), x, y, self.m)
        }
    }

    /// Split the top-scored interval at its midpoint; consumes one normal.
    pub fn step<S: NormalSource + ?Sized>(&mut self, src: &mut S) {
        let top = self.queue.pop().expect("partition is never empty").iv;
        let level = top.level + 1;
        let (left, right) = (2 * top.index, 2 * top.index + 1);
        let z = midpoint_from_len(src, ldexp_u128(1, top.level), top.x, top.y);
        let candidate = self.params.weight_from_dist(dyadic_dist(right, level)) * z.abs();
        if candidate > self.m {
            self.m = candidate;
        }
        let left = Cell { index: left, level, x: top.x, y: z, s: self.child_score(left, level, top.x, z) };
        let right = Cell { index: right, level, x: z, y: top.y, s: self.child_score(right, level, z, top.y) };
        self.push(left);
        self.push(right);
        self.steps += 1;
    }

    /// Current discrete maximum `m_k`.
    pub fn max(&self) -> f64 {
        self.m
    }

    /// Step counter `k`; equals the number of intervals in the partition.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    /// The partition, sorted by left endpoint.
    pub fn intervals(&self) -> Vec<ScoredInterval> {
        let mut cells: Vec<Cell> = self.queue.iter().map(|n| n.iv).collect();
        // exact order: compare index / 2^level at the common level
        cells.sort_by_key(|c| c.index << (MAX_SPLIT_LEVEL + 1 - c.level));
        cells.iter().map(Cell::view).collect()
    }

    /// The interval the next step would split.
    pub fn peek(&self) -> Option<ScoredInterval> {
        self.queue.peek().map(|n| n.iv.view())
    }
}

/// Output of [`adaptive_sup`].
#[derive(Debug, Clone, PartialEq)]
pub struct SupApprox {
    pub value: f64,
    /// `(step, m_step)` for every requested checkpoint, ascending.
    pub checkpoints: Vec<(usize, f64)>,
}

/// `A^ad_n(w, B) = m_n`, plus `m_k` at each requested checkpoint `k <= n`.
///
/// Consumes exactly `n - 1` normals from `src`.
pub fn adaptive_sup<S: NormalSource + ?Sized>(
    params: &WeightParams,
    src: &mut S,
    n: usize,
    checkpoints: &[usize],
) -> Result<SupApprox> {
    if n == 0 {
        return Err(Error::Domain("adaptive_sup: need n >= 1".into()));
    }
    let mut marks = checkpoints.to_vec();
    marks.sort_unstable();
    marks.dedup();
    if let Some(&bad) = marks.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::Domain(format!("adaptive_sup: checkpoint {bad} outside 1..={n}")));
    }
    let mut run = AdaptiveRun::with_capacity(*params, n)?;
    let mut recorded = Vec::with_capacity(marks.len());
    let mut pending = marks.into_iter().peekable();
    loop {
        while pending.peek() == Some(&run.steps()) {
            recorded.push((run.steps(), run.max()));
            pending.next();
        }
        if run.steps() == n {
            break;
        }
        run.step(src);
    }
    Ok(SupApprox { value: run.max(), checkpoints: recorded })
}

/// `m_n` only; the hot path used by the quantile sampler.
pub fn adaptive_sup_value<S: NormalSource + ?Sized>(
    params: &WeightParams,
    src: &mut S,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("adaptive_sup: need n >= 1".into()));
    }
    let mut run = AdaptiveRun::with_capacity(*params, n)?;
    for _ in 1..n {
        run.step(src);
    }
    Ok(run.max())
}

/// `A^eq_n(w, B) = max_{k=1..n-1} w(k/n) |B(k/n)|`, simulating the bridge
/// left to right. Consumes `n - 1` normals.
pub fn equidistant_sup<S: NormalSource + ?Sized>(
    params: &WeightParams,
    src: &mut S,
    n: usize,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("equidistant_sup: need n >= 2, got {n}")));
    }
    params.ensure_finite_supremum()?;
    let nf = n as f64;
    let mut b = 0.0;
    let mut prev_t = 0.0;
    let mut m = 0.0f64;
    for k in 1..n {
        let t = k as f64 / nf;
        b = forward_value(src, prev_t, t, b);
        prev_t = t;
        m = m.max(params.weight_at(t) * b.abs());
    }
    Ok(m)
}

/// Equidistant maxima on a fine grid `k / fine_n` and on every coarser grid
/// `k / n` with `n` dividing `fine_n`, all from one simulated path.
///
/// Returns `(A^eq_fine_n, [A^eq_n for n in coarse])`.
pub fn equidistant_nested<S: NormalSource + ?Sized>(
    params: &WeightParams,
    src: &mut S,
    fine_n: usize,
    coarse: &[usize],
) -> Result<(f64, Vec<f64>)> {
    if fine_n < 2 {
        return Err(Error::Domain(format!("equidistant_nested: need fine_n >= 2, got {fine_n}")));
    }
    params.ensure_finite_supremum()?;
    let strides = coarse
        .iter()
        .map(|&n| {
            if n >= 2 && fine_n.is_multiple_of(n) {
                Ok(fine_n / n)
            } else {
                Err(Error::Domain(format!(
                    "equidistant_nested: grid size {n} does not divide {fine_n}"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let nf = fine_n as f64;
    let mut fine_max = 0.0f64;
    let mut coarse_max = vec![0.0f64; coarse.len()];
    let mut b = 0.0;
    let mut prev_t = 0.0;
    for j in 1..fine_n {
        let t = j as f64 / nf;
        b = forward_value(src, prev_t, t, b);
        prev_t = t;
        let v = params.weight_at(t) * b.abs();
        fine_max = fine_max.max(v);
        for (slot, &stride) in coarse_max.iter_mut().zip(&strides) {
            if j % stride == 0 {
                *slot = slot.max(v);
            }
        }
    }
    Ok((fine_max, coarse_max))
}
