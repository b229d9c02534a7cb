//! Exit criteria. Runs as a plain binary so every verdict line is printed:
//!
//! ```text
//! cargo test --release -p bridge-quantile --test acceptance          # all
//! cargo test --release -p bridge-quantile --test acceptance -- 3 5   # some
//! ```

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bridge_quantile::bench::{
    bench_quantile, bench_strong, default_epsilon_sweep, estimate_order, Axis, BenchRecord, QuantileBench,
    StrongBench, ADAPTIVE_SWEEP, EQUIDISTANT_SWEEP,
};
use bridge_quantile::cusum::{critical_value, decide, simulate_series, CriticalSource, SeriesSample};
use bridge_quantile::quantile::{
    binomial_ci_indices, compute_quantile, compute_quantile_serial, order_index, order_statistic, Execution,
    QuantileRequest,
};
use bridge_quantile::reference_math::{darling_erdos_critical, kolmogorov_quantile, DarlingErdosVariant};
use bridge_quantile::sampler::{stream_index, StreamPurpose};
use bridge_quantile::score::{psi_arguments, score, ScoreInputs};
use bridge_quantile::sup_approx::AdaptiveRun;
use bridge_quantile::cusum::cusum_statistic;
use bridge_quantile::{Engine, Error, Interval, RandomStream, WeightParams};
use common::{binomial_pmf, expected_exceedance};

const KOLMOGOROV_95: f64 = 1.3581;
const MASTER_025: f64 = 2.0008;
const MASTER_045: f64 = 2.9222;

struct Verdict {
    pass: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn params(eta: f64, gamma: f64) -> WeightParams {
    WeightParams::new(eta, gamma).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::new();
    let (q, dt) = timed(|| kolmogorov_quantile(0.95).unwrap());
    v.check((q - KOLMOGOROV_95).abs() <= 5e-4, format!("kolmogorov_quantile(0.95) = {q:.6} (target 1.3581 +- 5e-4)"));
    v.check(dt < Duration::from_millis(1), format!("runtime {dt:?} < 1 ms"));
    v
}

fn criterion_2() -> Verdict {
    let mut v = Verdict::new();
    for (n, variant, target) in [
        (100, DarlingErdosVariant::OneSided, 3.241),
        (1000, DarlingErdosVariant::OneSided, 3.353),
        (100, DarlingErdosVariant::AsStated, 3.637),
    ] {
        let (c, dt) = timed(|| darling_erdos_critical(n, 0.05, 1.0, variant).unwrap());
        v.check(
            (c - target).abs() <= 5e-4,
            format!("darling-erdos {variant:?} n = {n}: {c:.6} (target {target} +- 5e-4)"),
        );
        v.check(dt < Duration::from_millis(1), format!("runtime {dt:?} < 1 ms"));
    }
    v
}

/// `(hits, max single-run seconds)` over seeds `1..=runs`.
fn seeded_runs(p: WeightParams, target: f64, tol: f64, runs: u64) -> (usize, f64) {
    let mut hits = 0;
    let mut slowest = 0.0f64;
    for seed in 1..=runs {
        let (res, dt) = timed(|| compute_quantile(&QuantileRequest::new(p, 0.95, 0.01, seed)).unwrap());
        if (res.quantile - target).abs() <= tol {
            hits += 1;
        }
        slowest = slowest.max(dt.as_secs_f64());
    }
    (hits, slowest)
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let (hits, slowest) = seeded_runs(params(0.0, 0.0), KOLMOGOROV_95, 3.0 * 0.01, 100);
    v.check(hits >= 95, format!("gamma = 0: {hits}/100 runs within 3e-2 of 1.3581 (need >= 95); slowest run {slowest:.2} s"));
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    for (gamma, master) in [(0.25, MASTER_025), (0.45, MASTER_045)] {
        let (hits, slowest) = seeded_runs(params(0.0, gamma), master, 3e-2, 100);
        v.check(hits >= 90, format!("gamma = {gamma}: {hits}/100 runs within 3e-2 of {master} (need >= 90)"));
        v.check(slowest <= 60.0, format!("gamma = {gamma}: slowest single run {slowest:.2} s <= 60 s"));
    }
    v
}

/// `(n, error)` rows of the published strong-error tables.
fn published_rows(engine: Engine, gamma: f64) -> &'static [(f64, f64)] {
    match (engine, gamma == 0.25) {
        (Engine::Equidistant, true) => &[
            (5.0, 0.429859249852026),
            (10.0, 0.294507623942235),
            (50.0, 0.128986501934025),
            (100.0, 0.0900469146283198),
            (500.0, 0.0392517679653400),
            (1000.0, 0.0264734082476520),
            (2000.0, 0.0186691886738727),
            (5000.0, 0.0105051317355712),
            (10000.0, 0.00657070915793112),
        ],
        (Engine::Equidistant, false) => &[
            (5.0, 0.845162302674577),
            (10.0, 0.635046672203047),
            (50.0, 0.332916705644544),
            (100.0, 0.257372844230698),
            (500.0, 0.138527134498256),
            (1000.0, 0.0981835797671943),
            (2000.0, 0.0763831526809399),
            (5000.0, 0.0462462344613881),
            (10000.0, 0.0304972559878189),
        ],
        (Engine::Adaptive, true) => &[
            (5.0, 0.425466181054310),
            (11.0, 0.204018197263233),
            (23.0, 0.0864910123905192),
            (50.0, 0.0253835368383637),
            (108.0, 0.00430764972725310),
            (232.0, 0.000310839442108387),
            (500.0, 9.91341050757244e-06),
            (1077.0, 8.28192554314100e-09),
            (2321.0, 1.14097620240727e-15),
        ],
        (Engine::Adaptive, false) => &[
            (5.0, 0.841602381690364),
            (11.0, 0.503065729375378),
            (23.0, 0.255763114604254),
            (50.0, 0.108889828970193),
            (108.0, 0.0307267520989333),
            (232.0, 0.00485878440089793),
            (500.0, 3.47795293175937e-05),
            (1077.0, 5.87700415977110e-09),
            (2321.0, 9.24949006275710e-15),
        ],
    }
}

fn row(records: &[BenchRecord], n: f64) -> &BenchRecord {
    records.iter().find(|r| r.sweep == n).expect("sweep value present")
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    let seed = 5;
    for gamma in [0.25, 0.45] {
        let p = params(0.0, gamma);
        let mut eq = StrongBench::new(p, Engine::Equidistant, seed);
        eq.sweep = EQUIDISTANT_SWEEP.to_vec();
        let eq_records = bench_strong(&eq, Execution::Parallel).unwrap();

        let mut ad = StrongBench::new(p, Engine::Adaptive, seed);
        ad.sweep = ADAPTIVE_SWEEP.to_vec();
        ad.sweep.push(1000);
        let ad_records = bench_strong(&ad, Execution::Parallel).unwrap();

        let in_range: Vec<BenchRecord> =
            eq_records.iter().filter(|r| (100.0..=10_000.0).contains(&r.sweep)).cloned().collect();
        let fit = estimate_order(&in_range, Axis::Sweep).unwrap();
        v.check(
            (fit.slope + 0.5).abs() <= 0.15,
            format!("gamma = {gamma}: equidistant slope over n in [1e2, 1e4] = {:.4} +- {:.4} (target -0.5 +- 0.15)", fit.slope, fit.stderr),
        );

        if gamma == 0.45 {
            let ratio = row(&eq_records, 1000.0).error / row(&ad_records, 1000.0).error;
            v.check(ratio >= 1e4, format!("gamma = 0.45: equidistant / adaptive error at n = 1000 = {ratio:.3e} (need >= 1e4)"));
        }

        for (engine, records) in [(Engine::Equidistant, &eq_records), (Engine::Adaptive, &ad_records)] {
            for &(n, published) in published_rows(engine, gamma) {
                let r = row(records, n);
                let factor = r.error / published;
                v.check(
                    (1.0 / 3.0..=3.0).contains(&factor),
                    format!(
                        "gamma = {gamma} {engine} n = {n}: error {:.4e} +- {:.1e} vs published {published:.4e} (factor {factor:.3}, need within 3)",
                        r.error, r.error_hw
                    ),
                );
            }
        }
    }
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let p = params(0.0, 0.25);
    let epsilons: Vec<f64> = default_epsilon_sweep().into_iter().filter(|e| (0.01..=0.64 + 1e-12).contains(e)).collect();
    let started = Instant::now();
    for (engine, target, tol) in [(Engine::Adaptive, -0.5, 0.15), (Engine::Equidistant, -0.25, 0.1)] {
        let mut cfg = QuantileBench::new(p, engine, 0.95, MASTER_025, 6);
        cfg.epsilons = epsilons.clone();
        // replications share the pool; each call is timed single-threaded
        let records = bench_quantile(&cfg, Execution::Parallel).unwrap();
        let fit = estimate_order(&records, Axis::Time).unwrap();
        v.check(
            (fit.slope - target).abs() <= tol,
            format!(
                "gamma = 0.25 {engine}: error-vs-time slope over {} epsilons in [0.01, 0.64] = {:.4} +- {:.4} (target {target} +- {tol})",
                records.len(),
                fit.slope,
                fit.stderr
            ),
        );
        let worst = records.iter().map(|r| r.error / r.sweep).fold(0.0, f64::max);
        v.lines.push(format!("info {engine}: largest error / epsilon = {worst:.3}"));
    }
    let total = started.elapsed();
    v.check(total <= Duration::from_secs(30 * 60), format!("bench runtime {:.1} s <= 30 min", total.as_secs_f64()));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();

    // partition tiling, m monotone and consistent with the evaluated sites
    let mut tiling = true;
    let mut max_ok = true;
    for (case, &(eta, gamma)) in [(0.0, 0.0), (0.0, 0.25), (0.0, 0.45), (0.2, 0.5), (0.1, 0.3)].iter().enumerate() {
        let p = params(eta, gamma);
        for rep in 0..20u64 {
            let mut rs = RandomStream::new(70 + case as u64, stream_index(StreamPurpose::Auxiliary, 7, rep));
            let mut run = AdaptiveRun::new(p).unwrap();
            let mut prev = 0.0;
            for _ in 1..300 {
                run.step(&mut rs);
                max_ok &= run.max() >= prev;
                prev = run.max();
            }
            let ivs = run.intervals();
            tiling &= ivs.len() == 300 && ivs[0].lo == 0.0 && ivs[ivs.len() - 1].hi == 1.0;
            tiling &= ivs.windows(2).all(|w| {
                (w[0].index + 1) << (127 - w[0].level) == w[1].index << (127 - w[1].level) && w[0].y == w[1].x
            });
            let seen = ivs.iter().filter(|iv| iv.lo > 0.0).map(|iv| p.dyadic_weight(iv.index, iv.level) * iv.x.abs()).fold(0.0, f64::max);
            max_ok &= seen == run.max();
        }
    }
    v.check(tiling, "partition tiles [0, 1] with consistent endpoint values".into());
    v.check(max_ok, "m_k nondecreasing and equal to the max over evaluated sites".into());

    // score vs quadrature
    let mut rs = RandomStream::new(71, stream_index(StreamPurpose::Auxiliary, 7, 1000));
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 200 {
        let eta = if rs.open_uniform() < 0.5 { 0.0 } else { 0.3 * rs.open_uniform() };
        let p = params(eta, 0.49 * rs.open_uniform());
        let (a, b) = (rs.open_uniform(), rs.open_uniform());
        let iv = Interval::new(a.min(b), a.max(b)).unwrap();
        let s = ScoreInputs { iv, x: 2.0 * rs.open_uniform() - 1.0, y: 2.0 * rs.open_uniform() - 1.0, m: 1.5 * rs.open_uniform() };
        let Some((a1, a2)) = psi_arguments(&p, &s) else { continue };
        if a1.abs() > 3.0 || a2.abs() > 3.0 {
            continue;
        }
        let exact = expected_exceedance(p.interval_weight(iv), 0.5 * (s.x + s.y), 0.5 * iv.len().sqrt(), s.m);
        worst = worst.max((score(&p, &s) - exact).abs() / exact);
        checked += 1;
    }
    v.check(worst <= 1e-8, format!("score vs quadrature, 200 inputs with |a| <= 3: max rel. error {worst:.2e} <= 1e-8"));

    // order statistic vs sort
    let mut rs = RandomStream::new(72, stream_index(StreamPurpose::Auxiliary, 7, 2000));
    let mut os_ok = true;
    for len in [1usize, 2, 3, 10, 101, 1000] {
        let xs: Vec<f64> = (0..len).map(|_| bridge_quantile::sampler::sample_std_normal(&mut rs)).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        for q in [0.01, 0.5, 0.9, 0.95, 0.99] {
            let idx = order_index(q, len);
            os_ok &= order_statistic(&mut xs.clone(), idx).unwrap() == sorted[idx - 1];
        }
    }
    v.check(os_ok, "order statistic equals sorted rank".into());

    // binomial CI exact coverage
    let mut cov_ok = true;
    for k in [5usize, 10, 20, 50, 100, 400] {
        for q in [0.05, 0.5, 0.9, 0.95] {
            let pmf = binomial_pmf(k, q);
            if let Ok((a, b)) = binomial_ci_indices(k, q, 0.05) {
                cov_ok &= pmf[a..b].iter().sum::<f64>() >= 0.95 - 1e-12;
                cov_ok &= pmf[..a].iter().sum::<f64>() <= 0.025 + 1e-12 && pmf[b..].iter().sum::<f64>() <= 0.025 + 1e-12;
            }
        }
    }
    cov_ok &= binomial_ci_indices(10, 0.5, 0.05).ok() == Some((2, 9));
    let infeasible = matches!(binomial_ci_indices(4, 0.5, 0.05), Err(Error::InsufficientSamples(_)));
    v.check(cov_ok, "binomial CI coverage >= 1 - alpha against exact pmf; (k=10, q=0.5) -> (2, 9)".into());
    v.check(infeasible, "(k=4, q=0.5, alpha=0.05) reports insufficient samples".into());

    // CUSUM shift and scale
    let mut rs = RandomStream::new(73, stream_index(StreamPurpose::Auxiliary, 7, 3000));
    let mut inv_ok = true;
    for (eta, gamma) in [(0.0, 0.0), (0.0, 0.25), (0.1, 0.5)] {
        let p = params(eta, gamma);
        let xs = simulate_series(&mut rs, 500, 1.3, Some((200, 0.7)));
        let t = cusum_statistic(&xs, &p);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 17.0).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| -3.0 * x).collect();
        inv_ok &= (cusum_statistic(&shifted, &p) - t).abs() <= 1e-9 * (1.0 + t);
        inv_ok &= (cusum_statistic(&scaled, &p) - 3.0 * t).abs() <= 1e-9 * (1.0 + t);
    }
    v.check(inv_ok, "CUSUM statistic shift invariant and scale equivariant".into());

    // worker count
    let req = QuantileRequest::new(params(0.0, 0.3), 0.95, 0.05, 74);
    let base = compute_quantile_serial(&req).unwrap();
    let same = [1, 2, 4, 7].iter().all(|&threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| compute_quantile(&req).unwrap()).same_estimate(&base)
    });
    v.check(same, "quantile bit-identical for 1, 2, 4, 7 workers and serial".into());
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let p = params(0.0, 0.25);
    let n = 10_000;
    let alpha = 0.05;
    let source = CriticalSource::MonteCarlo { epsilon: 0.01, seed: 8, engine: Engine::Adaptive };
    let c = critical_value(&source, &p, alpha, n).unwrap();
    let trials = 2000u64;
    let mut rejections = 0;
    for t in 0..trials {
        let mut rs = RandomStream::new(8, stream_index(StreamPurpose::Auxiliary, 8, t));
        let xs = simulate_series(&mut rs, n, 1.0, None);
        let series = SeriesSample::new(xs, 1.0).unwrap();
        if decide(&series, &p, c).unwrap().reject {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    v.check(
        (rate - 0.05).abs() <= 0.015,
        format!("gamma = 0.25, n = 1e4: rejection rate under H0 {rate:.4} over {trials} trials (critical value {c:.4}; target 0.05 +- 0.015)"),
    );
    v
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "Kolmogorov reference quantile", criterion_1),
        (2, "Darling-Erdos critical values", criterion_2),
        (3, "quantile vs known Kolmogorov law", criterion_3),
        (4, "published master quantiles", criterion_4),
        (5, "strong approximation orders", criterion_5),
        (6, "quantile convergence orders", criterion_6),
        (7, "property suites", criterion_7),
        (8, "level of the change-point test", criterion_8),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let (verdict, dt) = timed(run);
        for line in &verdict.lines {
            println!("    {line}");
        }
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {tag}: {name} ({:.1} s)", dt.as_secs_f64());
        if !verdict.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
