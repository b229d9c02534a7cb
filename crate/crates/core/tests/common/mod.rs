#![allow(dead_code)]

use bridge_quantile::reference_math::std_normal_pdf;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// `E((v Z - m)^+) + E((v Z + m)^-)` for `Z ~ N(mu, sd^2)` by quadrature in
/// the standardized variable, split at the kinks so both pieces are smooth.
pub fn expected_exceedance(v: f64, mu: f64, sd: f64, m: f64) -> f64 {
    const L: f64 = 40.0;
    const PANELS: usize = 20_000;
    let upper_kink = (m / v - mu) / sd;
    let lower_kink = (-m / v - mu) / sd;
    let up = simpson(
        |u| (v * (mu + sd * u) - m) * std_normal_pdf(u),
        upper_kink.max(-L),
        L,
        PANELS,
    );
    let down = simpson(
        |u| (-v * (mu + sd * u) - m) * std_normal_pdf(u),
        -L,
        lower_kink.min(L),
        PANELS,
    );
    up.max(0.0) + down.max(0.0)
}

/// Exact `P(Z < a)`, `P(Z >= b)` for `Z ~ Binomial(k, q)` from the full
/// probability mass function, built by repeated convolution.
pub fn binomial_pmf(k: usize, q: f64) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; pmf.len() + 1];
        for (j, &p) in pmf.iter().enumerate() {
            next[j] += p * (1.0 - q);
            next[j + 1] += p * q;
        }
        pmf = next;
    }
    pmf
}

/// Two-sided Kolmogorov-Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
