//! Special functions and reference distributions.
//!
//! Everything here is pure and deterministic. The standard normal CDF goes
//! through a relative-error-controlled `erfc`, so tail values keep their
//! significant digits; the greedy score depends on that.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{Error, Result};

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Breakpoint of the piecewise tail replacement in [`psi_tilde`].
pub const PSI_TAIL_CUTOFF: f64 = 3.0;

const KOLMOGOROV_TERM_TOL: f64 = 1e-14;
const KOLMOGOROV_MAX_TERMS: usize = 1_000_000;
const KOLMOGOROV_BRACKET: (f64, f64) = (1e-3, 5.0);
const KOLMOGOROV_XTOL: f64 = 1e-10;

/// Density and distribution function of `N(0, 1)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdNormalEval {
    pub x: f64,
    pub pdf: f64,
    pub cdf: f64,
}

impl StdNormalEval {
    pub fn at(x: f64) -> Result<Self> {
        Ok(Self {
            x,
            pdf: std_normal_pdf(x),
            cdf: std_normal_cdf(x)?,
        })
    }
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Phi(x)`, the standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("std_normal_cdf: non-finite argument {x}")));
    }
    Ok(phi(x))
}

#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `psi(a) = Phi'(a) + a * Phi(a)`, i.e. `E((Y + a)^+)` for `Y ~ N(0, 1)`.
///
/// Non-finite input propagates as NaN.
#[inline]
pub fn psi(a: f64) -> f64 {
    std_normal_pdf(a) + a * phi(a)
}

/// Tail-stabilized replacement of [`psi`]: `a` above `3`, `a^-2 * Phi'(a)`
/// below `-3`, `psi(a)` in between.
///
/// The function jumps at `|a| = 3`; that is intentional and kept as is.
#[inline]
pub fn psi_tilde(a: f64) -> f64 {
    if a > PSI_TAIL_CUTOFF {
        a
    } else if a < -PSI_TAIL_CUTOFF {
        std_normal_pdf(a) / (a * a)
    } else {
        psi(a)
    }
}

/// Distribution function of the Kolmogorov distribution, the law of
/// `sup |B(t)|` for a Brownian bridge `B`.
///
/// Alternating series `1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`, cut at
/// the first term below `1e-14`.
pub fn kolmogorov_cdf(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("kolmogorov_cdf: need x > 0, got {x}")));
    }
    let x2 = x * x;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=KOLMOGOROV_MAX_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x2).exp();
        if term < KOLMOGOROV_TERM_TOL {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    Ok((1.0 - 2.0 * sum).clamp(0.0, 1.0))
}

/// Inverse of [`kolmogorov_cdf`] by bisection on `[1e-3, 5]`.
pub fn kolmogorov_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("kolmogorov_quantile: need 0 < q < 1, got {q}")));
    }
    let (mut lo, mut hi) = KOLMOGOROV_BRACKET;
    if kolmogorov_cdf(lo)? > q || kolmogorov_cdf(hi)? < q {
        return Err(Error::Domain(format!(
            "kolmogorov_quantile: q = {q} not bracketed by [{lo}, {hi}]"
        )));
    }
    while hi - lo > KOLMOGOROV_XTOL {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which inner term the Darling–Erdős critical value uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DarlingErdosVariant {
    /// `-log(-1/2 * log(1 - alpha))`, the two-sided Gumbel limit.
    #[default]
    AsStated,
    /// `-log(-log(1 - alpha))`; reproduces the tabulated 3.241 / 3.353.
    OneSided,
}

impl std::str::FromStr for DarlingErdosVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-stated" => Ok(Self::AsStated),
            "one-sided" => Ok(Self::OneSided),
            other => Err(Error::Config(format!(
                "unknown Darling-Erdos variant '{other}' (expected as-stated or one-sided)"
            ))),
        }
    }
}

/// Asymptotic critical value of the CUSUM statistic with weight
/// `(t(1-t))^(-1/2)`:
///
/// `c_n(alpha) = sigma / a(log n) * (g(alpha) + b(log n))`,
/// `a(x) = sqrt(2 log x)`, `b(x) = 2 log x + 1/2 log log x - 1/2 log pi`.
pub fn darling_erdos_critical(
    n: u64,
    alpha: f64,
    sigma: f64,
    variant: DarlingErdosVariant,
) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("darling_erdos_critical: need n >= 3, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "darling_erdos_critical: need 0 < alpha < 1, got {alpha}"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("darling_erdos_critical: need sigma > 0, got {sigma}")));
    }
    let log_n = (n as f64).ln();
    let log_log_n = log_n.ln();
    let a = (2.0 * log_log_n).sqrt();
    let b = 2.0 * log_log_n + 0.5 * log_log_n.ln() - 0.5 * PI.ln();
    let log_level = (-alpha).ln_1p();
    let g = match variant {
        DarlingErdosVariant::AsStated => -(-0.5 * log_level).ln(),
        DarlingErdosVariant::OneSided => -(-log_level).ln(),
    };
    Ok(sigma / a * (g + b))
}
