mod common;

use common::{log_uniform, rel_diff, signed_log_uniform};
use lqshrink::prox::{constant_factor_audit, oracle_minimize, oracle_scalar, scalar_objective, shrink_minimize, zero_threshold, DecoupledProblem};
use lqshrink::shrinkage::{catalog, rho_hs};
use proptest::prelude::*;

/// Minimizer of `(v − ω)² + α|ω|^q` from its stationary points.
///
/// On `t > 0` the derivative `2(t − a) + αq t^{q−1}` is convex for `0 < q < 1`
/// with its minimum at `t* = (αq(1−q)/2)^{1/(2−q)}`, so the only candidate
/// local minimizer is its root in `[t*, a]`.
fn stationary_oracle(v: f64, alpha: f64, q: f64) -> f64 {
    let a = v.abs();
    let cand = if q == 0.0 {
        a
    } else if q == 1.0 {
        (a - alpha / 2.0).max(0.0)
    } else {
        let df = |t: f64| 2.0 * (t - a) + alpha * q * t.powf(q - 1.0);
        let tstar = (alpha * q * (1.0 - q) / 2.0).powf(1.0 / (2.0 - q));
        if tstar >= a || df(tstar) >= 0.0 {
            0.0
        } else {
            let (mut lo, mut hi) = (tstar, a);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if df(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    if cand > 0.0 && scalar_objective(a, cand, alpha, q) < a * a {
        v.signum() * cand
    } else {
        0.0
    }
}

proptest! {
    #[test]
    fn oracle_matches_stationary_point_analysis(v in signed_log_uniform(-3.0, 3.0), a in log_uniform(-2.0, 2.0), q in 0.0f64..=1.0) {
        let o = oracle_scalar(v, a, q);
        let s = stationary_oracle(v, a, q);
        let (fo, fs) = (scalar_objective(v, o, a, q), scalar_objective(v, s, a, q));
        prop_assert!(fo <= fs * (1.0 + 1e-12) + 1e-300, "oracle {o} ({fo}) vs stationary {s} ({fs})");
        prop_assert!(rel_diff(fo, fs) <= 1e-12, "oracle {o} ({fo}) vs stationary {s} ({fs})");
    }

    #[test]
    fn oracle_is_odd(v in signed_log_uniform(-3.0, 3.0), a in log_uniform(-2.0, 2.0), q in 0.0f64..=1.0) {
        prop_assert_eq!(oracle_scalar(-v, a, q), -oracle_scalar(v, a, q));
    }

    #[test]
    fn vector_oracle_is_componentwise(v in prop::collection::vec(signed_log_uniform(-2.0, 2.0), 1..12), a in prop::collection::vec(log_uniform(-2.0, 1.0), 12), q in 0.0f64..=1.0) {
        let weights = a[..v.len()].to_vec();
        let p = DecoupledProblem::new(v.clone(), weights.clone(), q).unwrap();
        let r = oracle_minimize(&p);
        for i in 0..v.len() {
            prop_assert_eq!(r.omega[i], oracle_scalar(v[i], weights[i], q));
        }
    }

    #[test]
    fn hard_threshold_scales_linearly(v in signed_log_uniform(-2.0, 2.0), a in log_uniform(-2.0, 2.0), t in log_uniform(-1.0, 1.0)) {
        let lhs = oracle_scalar(t * v, t * t * a, 0.0);
        let rhs = t * oracle_scalar(v, a, 0.0);
        prop_assert!(rel_diff(lhs, rhs) <= 1e-12 || (lhs - rhs).abs() <= 1e-12 * (t * v).abs(), "{lhs} vs {rhs}");
    }

    #[test]
    fn shrinkage_never_beats_the_oracle(v in signed_log_uniform(-3.0, 3.0), a in log_uniform(-2.0, 2.0), k in 0usize..18, qi in 1usize..10) {
        let rules = catalog();
        let (rule, q) = if k < rules.len() { (rules[k], (1.0 / rules[k].rho).min(1.0)) } else { let q = qi as f64 / 10.0; (rho_hs(q).unwrap(), q) };
        let p = DecoupledProblem::uniform(vec![v], a, q).unwrap();
        let s = shrink_minimize(&p, &rule).unwrap();
        let o = oracle_minimize(&p);
        prop_assert!(s.objective >= o.objective * (1.0 - 1e-12), "{rule} q = {q}: {} < {}", s.objective, o.objective);
    }
}

#[test]
fn oracle_is_nondecreasing_in_v() {
    for q in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
        for a in [0.01, 1.0, 30.0] {
            let mut last = 0.0;
            for i in 0..2000 {
                let v = 10f64.powf(-3.0 + 6.0 * i as f64 / 1999.0);
                let o = oracle_scalar(v, a, q);
                assert!(o >= last, "q = {q}, alpha = {a}, v = {v}: {o} < {last}");
                last = o;
            }
        }
    }
}

#[test]
fn zero_region_is_exact() {
    for qi in 0..10 {
        let q = qi as f64 / 10.0;
        for a in [0.01, 0.3, 1.0, 7.0, 100.0] {
            let t = zero_threshold(a, q).unwrap();
            for k in 0..200 {
                let v = t * (k as f64 / 200.0) * 0.999_999;
                assert_eq!(oracle_scalar(v, a, q), 0.0, "q = {q}, alpha = {a}, v = {v}");
                assert_eq!(oracle_scalar(-v, a, q), 0.0);
            }
            for k in 1..200 {
                let v = t * (1.0 + 1e-6) * (1.0 + k as f64 / 50.0);
                assert_ne!(oracle_scalar(v, a, q), 0.0, "q = {q}, alpha = {a}, v = {v}");
            }
        }
    }
}

#[test]
fn q_one_oracle_is_soft_threshold_at_half_alpha() {
    for i in 0..500 {
        let v = -5.0 + 10.0 * i as f64 / 499.0;
        for a in [0.1, 1.0, 4.0] {
            let expected = v.signum() * (v.abs() - a / 2.0).max(0.0);
            assert!((oracle_scalar(v, a, 1.0) - expected).abs() <= 1e-11, "v = {v}, alpha = {a}");
        }
    }
}

#[test]
fn audit_ratio_is_at_least_one_for_every_rule() {
    let sample = lqshrink::prox::log_grid_sample((1e-3, 1e3, 25), (1e-2, 1e2, 25));
    for rule in catalog() {
        let q = (1.0 / rule.rho).min(1.0);
        let a = constant_factor_audit(q, &rule, &sample).unwrap();
        assert!(a.min_ratio >= 1.0 - 1e-12 && a.max_ratio.is_finite(), "{rule}: {} {}", a.min_ratio, a.max_ratio);
    }
}
