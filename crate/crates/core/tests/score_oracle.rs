mod common;

use bridge_quantile::score::{psi_arguments, score, score_with, PsiVariant, ScoreInputs};
use bridge_quantile::sampler::{stream_index, StreamPurpose};
use bridge_quantile::{Interval, RandomStream, WeightParams};
use common::expected_exceedance;

fn oracle(p: &WeightParams, s: &ScoreInputs) -> f64 {
    let v = p.interval_weight(s.iv);
    if v == 0.0 {
        return 0.0;
    }
    let mu = 0.5 * (s.x + s.y);
    let sd = 0.5 * s.iv.len().sqrt();
    expected_exceedance(v, mu, sd, s.m)
}

fn random_inputs(rs: &mut RandomStream) -> (WeightParams, ScoreInputs) {
    let eta = if rs.open_uniform() < 0.5 { 0.0 } else { 0.3 * rs.open_uniform() };
    let gamma = 0.49 * rs.open_uniform();
    let p = WeightParams::new(eta, gamma).unwrap();
    let a = rs.open_uniform();
    let b = rs.open_uniform();
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let iv = Interval::new(lo, hi).unwrap();
    let x = 2.0 * rs.open_uniform() - 1.0;
    let y = 2.0 * rs.open_uniform() - 1.0;
    let m = 1.5 * rs.open_uniform();
    (p, ScoreInputs { iv, x, y, m })
}

#[test]
fn closed_form_matches_quadrature() {
    let mut rs = RandomStream::new(20, stream_index(StreamPurpose::Auxiliary, 1, 0));
    let mut checked = 0;
    while checked < 100 {
        let (p, s) = random_inputs(&mut rs);
        let Some((a1, a2)) = psi_arguments(&p, &s) else { continue };
        if a1.abs() > 3.0 || a2.abs() > 3.0 {
            continue;
        }
        let exact = oracle(&p, &s);
        let closed = score(&p, &s);
        assert!(
            (closed - exact).abs() <= 1e-8 * exact,
            "closed {closed} vs quadrature {exact} at {s:?}, {p:?}"
        );
        assert_eq!(closed, score_with(&p, &s, PsiVariant::Exact));
        checked += 1;
    }
}

#[test]
fn exact_psi_matches_quadrature_everywhere() {
    // outside |a| <= 3 the stabilized form departs on purpose; the exact one must not
    let p = WeightParams::new(0.0, 0.3).unwrap();
    for (lo, hi, x, y, m) in [(0.4, 0.45, 0.2, 0.1, 1.4), (0.1, 0.9, 1.5, 1.7, 0.2), (0.3, 0.31, 0.0, 0.05, 0.9)] {
        let s = ScoreInputs { iv: Interval::new(lo, hi).unwrap(), x, y, m };
        let exact = oracle(&p, &s);
        let closed = score_with(&p, &s, PsiVariant::Exact);
        assert!((closed - exact).abs() <= 1e-7 * exact.max(1e-300), "{closed} vs {exact}");
    }
}

#[test]
fn expectation_is_nonincreasing_in_m() {
    let mut rs = RandomStream::new(21, stream_index(StreamPurpose::Auxiliary, 1, 1));
    let mut checked = 0;
    while checked < 100 {
        let (p, s) = random_inputs(&mut rs);
        if p.interval_weight(s.iv) == 0.0 {
            continue;
        }
        let bigger = ScoreInputs { m: s.m + 0.3 * rs.open_uniform(), ..s };
        let (a, b) = (oracle(&p, &s), oracle(&p, &bigger));
        assert!(b <= a * (1.0 + 1e-12), "{a} -> {b}");
        // the closed form follows wherever all arguments stay in |a| <= 3
        let args = [psi_arguments(&p, &s).unwrap(), psi_arguments(&p, &bigger).unwrap()];
        if args.iter().all(|&(u, v)| u.abs() <= 3.0 && v.abs() <= 3.0) {
            assert!((score(&p, &s) - a).abs() <= 1e-6 * a);
            assert!((score(&p, &bigger) - b).abs() <= 1e-6 * b);
            assert!(score(&p, &bigger) <= score(&p, &s));
        }
        checked += 1;
    }
}
