//! Measured strong errors of the equidistant discretization, used to pick
//! its refinement level for a target error.
//!
//! A table is the output of a strong equidistant benchmark. Built-in tables
//! cover `eta = 0` with `gamma = 0.25` and `gamma = 0.45`; other parameters
//! need a table generated with `bench strong --engine equidistant`.

use std::path::Path;

use crate::bench::{read_records, read_records_from_path, BenchRecord};
use crate::error::{Error, Result};
use crate::quantile::Engine;
use crate::weights::WeightParams;

const BUILTIN_GAMMA_025: &str = include_str!("../data/strong_equidistant_eta0_gamma0.25.csv");
const BUILTIN_GAMMA_045: &str = include_str!("../data/strong_equidistant_eta0_gamma0.45.csv");

/// Piecewise log-log interpolant of `n -> E|S - A^eq_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    eta: f64,
    gamma: f64,
    /// `(n, error)` sorted by `n`.
    points: Vec<(f64, f64)>,
    /// Least-squares log-log slope over all points; used beyond the table.
    slope: f64,
}

impl Calibration {
    pub fn from_points(eta: f64, gamma: f64, points: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        if pts.len() < 2 {
            return Err(Error::Config("calibration table needs at least 2 rows".into()));
        }
        if pts.iter().any(|&(n, e)| !(n >= 1.0 && e > 0.0 && e.is_finite())) {
            return Err(Error::Config("calibration rows need n >= 1 and a positive error".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("calibration table has repeated n".into()));
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0.ln()).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
        let slope = sxy / sxx;
        if !(slope < 0.0) {
            return Err(Error::Config(format!(
                "calibration errors do not decrease with n (log-log slope {slope})"
            )));
        }
        Ok(Self { eta, gamma, points: pts, slope })
    }

    /// Table from strong equidistant benchmark records for one `(eta, gamma)`.
    pub fn from_records(records: &[BenchRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Config("empty calibration table".into()))?;
        if records.iter().any(|r| r.engine != Engine::Equidistant || r.q.is_some()) {
            return Err(Error::Config(
                "calibration table must come from a strong equidistant benchmark".into(),
            ));
        }
        if records.iter().any(|r| r.eta != first.eta || r.gamma != first.gamma) {
            return Err(Error::Config("calibration table mixes weight parameters".into()));
        }
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.sweep, r.error)).collect();
        Self::from_points(first.eta, first.gamma, &pts)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_records(&read_records_from_path(path)?)
    }

    pub fn builtin(params: &WeightParams) -> Option<Self> {
        if params.eta() != 0.0 {
            return None;
        }
        let text = match params.gamma() {
            0.25 => BUILTIN_GAMMA_025,
            0.45 => BUILTIN_GAMMA_045,
            _ => return None,
        };
        let records = read_records(text.as_bytes()).expect("built-in table parses");
        Some(Self::from_records(&records).expect("built-in table is valid"))
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn matches(&self, params: &WeightParams) -> bool {
        self.eta == params.eta() && self.gamma == params.gamma()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Interpolated error at `n`.
    pub fn error_at(&self, n: f64) -> f64 {
        let pts = &self.points;
        let (n_first, e_first) = pts[0];
        let (n_last, e_last) = pts[pts.len() - 1];
        if n <= n_first {
            return e_first * (n / n_first).powf(self.slope);
        }
        if n >= n_last {
            return e_last * (n / n_last).powf(self.slope);
        }
        let i = pts.partition_point(|p| p.0 <= n) - 1;
        let (n0, e0) = pts[i];
        let (n1, e1) = pts[i + 1];
        let t = (n / n0).ln() / (n1 / n0).ln();
        (e0.ln() + t * (e1 / e0).ln()).exp()
    }

    /// Smallest `n >= 2` at which the interpolated error is at most `epsilon`.
    pub fn n0_for(&self, epsilon: f64) -> usize {
        let pts = &self.points;
        let (n_first, e_first) = pts[0];
        let cont = if epsilon >= e_first {
            n_first * (epsilon / e_first).powf(1.0 / self.slope)
        } else {
            let mut found = None;
            for w in pts.windows(2) {
                let ((n0, e0), (n1, e1)) = (w[0], w[1]);
                if e1 <= epsilon && epsilon < e0 {
                    let t = (epsilon / e0).ln() / (e1 / e0).ln();
                    found = Some(n0 * (t * (n1 / n0).ln()).exp());
                    break;
                }
            }
            found.unwrap_or_else(|| {
                let (n_last, e_last) = pts[pts.len() - 1];
                n_last * (epsilon / e_last).powf(1.0 / self.slope)
            })
        };
        // guard the ceil against the interpolant round trip landing a hair above
        let c = cont.min(1e15);
        let r = c.round();
        let n = if (c - r).abs() <= 1e-9 * c.max(1.0) { r } else { c.ceil() };
        (n as usize).max(2)
    }
}
