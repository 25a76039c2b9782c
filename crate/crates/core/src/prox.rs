//! The decoupled problem `I_q(v, ω) = ‖v − ω‖² + Σ α_n |ω_n|^q`.
//!
//! [`shrink_minimize`] evaluates a q-dependent shrinkage rule componentwise;
//! [`oracle_scalar`] is an independent grid-and-refine global minimizer used to
//! audit it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_q, Error, Result};
use crate::par;
use crate::shrinkage::{cq, ShrinkageRule};

/// `α·|ω|^q` with `0⁰ = 0`, i.e. an exact-zero count at `q = 0`.
#[inline]
pub fn penalty_term(omega: f64, alpha: f64, q: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    if q == 0.0 {
        alpha
    } else if q == 1.0 {
        alpha * omega.abs()
    } else if q == 2.0 {
        alpha * omega * omega
    } else {
        alpha * omega.abs().powf(q)
    }
}

/// `(v − ω)² + α·|ω|^q`.
#[inline]
pub fn scalar_objective(v: f64, omega: f64, alpha: f64, q: f64) -> f64 {
    let r = v - omega;
    r * r + penalty_term(omega, alpha, q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledProblem {
    v: Vec<f64>,
    weights: Vec<f64>,
    q: f64,
}

impl DecoupledProblem {
    pub fn new(v: Vec<f64>, weights: Vec<f64>, q: f64) -> Result<Self> {
        check_q(q, 0.0, 2.0)?;
        if v.len() != weights.len() {
            return Err(Error::Dimension(format!("{} coefficients but {} weights", v.len(), weights.len())));
        }
        if let Some(a) = weights.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::invalid("weights", format!("must be finite and nonnegative, found {a}")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("v", "must be finite"));
        }
        Ok(DecoupledProblem { v, weights, q })
    }

    pub fn uniform(v: Vec<f64>, alpha: f64, q: f64) -> Result<Self> {
        let weights = vec![alpha; v.len()];
        Self::new(v, weights, q)
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn objective(&self, omega: &[f64]) -> Result<f64> {
        if omega.len() != self.v.len() {
            return Err(Error::Dimension(format!("omega has {} entries, expected {}", omega.len(), self.v.len())));
        }
        Ok(self
            .v
            .iter()
            .zip(&self.weights)
            .zip(omega)
            .map(|((&v, &a), &w)| scalar_objective(v, w, a, self.q))
            .sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub omega: Vec<f64>,
    pub objective: f64,
    /// `objective / oracle objective`, once audited.
    pub ratio_to_oracle: Option<f64>,
}

impl ProxResult {
    /// Attach the ratio against the componentwise oracle.
    pub fn audited(mut self, p: &DecoupledProblem) -> Self {
        let oracle = oracle_minimize(p);
        self.ratio_to_oracle = Some(ratio(self.objective, oracle.objective));
        self
    }
}

/// `a / b` with `0/0 = 1`.
pub fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        a / b
    }
}

pub(crate) fn check_hypothesis(rule: &ShrinkageRule, q: f64) -> Result<()> {
    let min = rule.min_q();
    if q < min * (1.0 - 1e-12) {
        return Err(Error::HypothesisViolated { rule: rule.to_string(), q, min });
    }
    Ok(())
}

/// `ω_n = ϱ(v_n, α_n |v_n|^{q−1})`. Requires `q ≥ 1/rho`.
pub fn shrink_minimize(p: &DecoupledProblem, rule: &ShrinkageRule) -> Result<ProxResult> {
    check_hypothesis(rule, p.q)?;
    let wrapped = rule.wrap_q(p.q)?;
    let omega: Vec<f64> = p.v.iter().zip(&p.weights).map(|(&v, &a)| wrapped.apply(v, a)).collect();
    let objective = p.objective(&omega)?;
    if !objective.is_finite() {
        return Err(Error::invalid("v", format!("objective is not finite for rule {rule}")));
    }
    Ok(ProxResult { omega, objective, ratio_to_oracle: None })
}

const ORACLE_GRID: usize = 10_000;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Global minimizer of `ω ↦ (v − ω)² + α|ω|^q` by dense search and refinement.
///
/// A minimizer lies in `sign(v)·[0, |v|]`: clipping any other ω to that segment
/// lowers `(v − ω)²` and does not raise `|ω|^q`. The segment is scanned on a
/// 10⁴-cell grid, the best cell is refined by golden section to a width of
/// `1e−12` (or a few ulps of `|v|`), and the best nonzero candidate is then
/// compared against `ω = 0` explicitly. Exact ties go to the nonzero candidate
/// when `q < 1`, where the minimizer genuinely can be non-unique.
pub fn oracle_scalar(v: f64, alpha: f64, q: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    if alpha == 0.0 {
        return v;
    }
    let a = v.abs();
    let f = |t: f64| scalar_objective(a, t, alpha, q);

    let h = a / ORACLE_GRID as f64;
    let mut best_i = ORACLE_GRID;
    let mut best_f = f(a);
    for i in (1..ORACLE_GRID).rev() {
        let fi = f(h * i as f64);
        if fi < best_f {
            best_f = fi;
            best_i = i;
        }
    }
    let mut lo = h * (best_i - 1) as f64;
    let mut hi = if best_i == ORACLE_GRID { a } else { h * (best_i + 1) as f64 };
    let resolution = 1e-12f64.max(8.0 * f64::EPSILON * a);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > resolution {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }

    // Golden section only resolves the minimizer to about √ε relative; a
    // bisection on the sign of f' inside the cell recovers full precision.
    let cell = (h * (best_i - 1) as f64, if best_i == ORACLE_GRID { a } else { h * (best_i + 1) as f64 });
    let polished = derivative_bisection(a, alpha, q, cell);

    let mut t = a;
    let mut ft = f(a);
    for (c, fc) in [(h * best_i as f64, best_f), (x1, f1), (x2, f2)] {
        if c > 0.0 && fc < ft {
            t = c;
            ft = fc;
        }
    }
    // near the minimum f is flat to rounding, so the stationary point wins
    // whenever it is within a few ulps of the best sampled value
    if polished.0 > 0.0 && polished.1 <= ft + 4.0 * f64::EPSILON * ft {
        t = polished.0;
        ft = ft.min(polished.1);
    }
    let f0 = a * a;
    let nonzero_wins = if q < 1.0 { ft <= f0 } else { ft < f0 };
    if nonzero_wins {
        v.signum() * t
    } else {
        0.0
    }
}

/// Root of `f'(t) = 2(t − a) + αq t^{q−1}` in the cell, if f' changes sign there.
fn derivative_bisection(a: f64, alpha: f64, q: f64, (mut lo, mut hi): (f64, f64)) -> (f64, f64) {
    let none = (0.0, f64::INFINITY);
    if q == 0.0 {
        return none;
    }
    let df = |t: f64| 2.0 * (t - a) + alpha * q * t.powf(q - 1.0);
    if lo == 0.0 {
        lo = hi * 1e-300_f64.max(f64::MIN_POSITIVE);
    }
    if !(df(lo) < 0.0 && df(hi) > 0.0) {
        if df(hi) <= 0.0 && hi == a {
            return (a, scalar_objective(a, a, alpha, q));
        }
        return none;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if df(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, scalar_objective(a, t, alpha, q))
}

/// Componentwise oracle for the full decoupled problem.
pub fn oracle_minimize(p: &DecoupledProblem) -> ProxResult {
    let pairs: Vec<(f64, f64)> = p.v.iter().copied().zip(p.weights.iter().copied()).collect();
    let omega = par::map(&pairs, |&(v, a)| oracle_scalar(v, a, p.q));
    let objective = p.objective(&omega).expect("same length");
    ProxResult { omega, objective, ratio_to_oracle: Some(1.0) }
}

/// `(c_q α)^{1/(2−q)}`: below it the exact minimizer is zero.
pub fn zero_threshold(alpha: f64, q: f64) -> Result<f64> {
    if !(q.is_finite() && (0.0..1.0).contains(&q)) {
        return Err(Error::QOutOfRange { q, lo: 0.0, hi: 1.0 });
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    Ok((cq(q)? * alpha).powf(1.0 / (2.0 - q)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRow {
    pub v: f64,
    pub alpha: f64,
    pub shrink_obj: f64,
    pub oracle_obj: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Audit {
    pub rows: Vec<AuditRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

/// Compare the wrapped rule against the oracle at one `(v, α)`.
pub fn audit_point(rule: &ShrinkageRule, q: f64, v: f64, alpha: f64) -> Result<AuditRow> {
    let wrapped = rule.wrap_q(q)?;
    let s = scalar_objective(v, wrapped.apply(v, alpha), alpha, q);
    let o = scalar_objective(v, oracle_scalar(v, alpha, q), alpha, q);
    Ok(AuditRow { v, alpha, shrink_obj: s, oracle_obj: o, ratio: ratio(s, o) })
}

/// Max and min of `I_q(v, shrink) / I_q(v, oracle)` over the sample.
pub fn constant_factor_audit(q: f64, rule: &ShrinkageRule, sample: &[(f64, f64)]) -> Result<Audit> {
    if sample.is_empty() {
        return Err(Error::invalid("sample", "must be nonempty"));
    }
    check_q(q, 0.0, 2.0)?;
    check_hypothesis(rule, q)?;
    let rows = par::try_map(sample, |&(v, a)| audit_point(rule, q, v, a))?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, nan_max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, nan_min);
    Ok(Audit { rows, max_ratio, min_ratio })
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

/// Cartesian log grid `v ∈ logspace(v_lo, v_hi, nv)`, `α ∈ logspace(a_lo, a_hi, na)`.
pub fn log_grid_sample(v: (f64, f64, usize), alpha: (f64, f64, usize)) -> Vec<(f64, f64)> {
    let vs = crate::shrinkage::logspace(v.0, v.1, v.2);
    let alphas = crate::shrinkage::logspace(alpha.0, alpha.1, alpha.2);
    vs.iter().flat_map(|&x| alphas.iter().map(move |&a| (x, a))).collect()
}

/// `n` pairs with `|v|` log-uniform on `v_range`, a fair random sign, and `α`
/// log-uniform on `alpha_range`; reproducible per seed.
pub fn log_uniform_sample(n: usize, v_range: (f64, f64), alpha_range: (f64, f64), seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |(lo, hi): (f64, f64), rng: &mut ChaCha8Rng| (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    (0..n)
        .map(|_| {
            let v = draw(v_range, &mut rng);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            (sign * v, draw(alpha_range, &mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shrinkage::rho_hs;

    #[test]
    fn zero_data_gives_zero() {
        let p = DecoupledProblem::uniform(vec![0.0; 5], 2.0, 0.5).unwrap();
        let r = shrink_minimize(&p, &rho_hs(0.5).unwrap()).unwrap();
        assert_eq!(r.omega, vec![0.0; 5]);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn q_one_soft_example() {
        let p = DecoupledProblem::new(vec![5.0], vec![4.0], 1.0).unwrap();
        let r = shrink_minimize(&p, &rho_hs(1.0).unwrap()).unwrap().audited(&p);
        assert_eq!(r.omega, vec![3.0]);
        assert_eq!(r.objective, 16.0);
        assert!((r.ratio_to_oracle.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn q_zero_hard_example() {
        let p = DecoupledProblem::new(vec![3.0, 1.5], vec![4.0, 4.0], 0.0).unwrap();
        let r = shrink_minimize(&p, &rho_hs(0.0).unwrap()).unwrap();
        assert_eq!(r.omega, vec![3.0, 0.0]);
        // 0 + 4 + 2.25 + 0
        assert_eq!(r.objective, 6.25);
    }

    #[test]
    fn hypothesis_is_enforced() {
        let p = DecoupledProblem::uniform(vec![1.0], 1.0, 0.4).unwrap();
        let ndeg = ShrinkageRule::n_degree(1).unwrap();
        assert!(matches!(shrink_minimize(&p, &ndeg), Err(Error::HypothesisViolated { .. })));
        let p = DecoupledProblem::uniform(vec![1.0], 1.0, 0.5).unwrap();
        assert!(shrink_minimize(&p, &ndeg).is_ok());
    }

    #[test]
    fn problem_validation() {
        assert!(DecoupledProblem::new(vec![1.0], vec![1.0, 2.0], 1.0).is_err());
        assert!(DecoupledProblem::new(vec![1.0], vec![-1.0], 1.0).is_err());
        assert!(DecoupledProblem::new(vec![1.0], vec![1.0], 2.5).is_err());
    }

    #[test]
    fn oracle_known_minimizers() {
        assert!((oracle_scalar(5.0, 8.0, 1.0) - 1.0).abs() < 1e-9);
        assert!((oracle_scalar(3.0, 4.0, 0.0) - 3.0).abs() < 1e-9);
        assert_eq!(oracle_scalar(1.5, 4.0, 0.0), 0.0);
        assert!((oracle_scalar(6.0, 2.0, 2.0) - 2.0).abs() < 1e-9);
        assert!((oracle_scalar(-6.0, 2.0, 2.0) + 2.0).abs() < 1e-9);
        assert_eq!(oracle_scalar(0.9, 1.0, 0.5), 0.0);
    }

    #[test]
    fn oracle_half_power_regression() {
        // stationary point of (2−ω)² + √ω by Newton: 2(ω−2) + ω^{−1/2}/2 = 0
        let mut w: f64 = 2.0;
        for _ in 0..50 {
            let g = 2.0 * (w - 2.0) + 0.5 / w.sqrt();
            let h = 2.0 - 0.25 * w.powf(-1.5);
            w -= g / h;
        }
        assert!((2.0 - w).powi(2) + w.sqrt() < 4.0);
        let o = oracle_scalar(2.0, 1.0, 0.5);
        assert!((o - w).abs() < 1e-9, "{o} vs {w}");
        assert!((o - 1.814_402_018_580_539).abs() < 1e-9);
    }

    #[test]
    fn thresholds() {
        assert!((zero_threshold(4.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((zero_threshold(1.0, 0.5).unwrap() - 0.944_940_787_421_154_8).abs() < 1e-12);
        assert!(zero_threshold(1.0, 1.0).is_err());
    }

    #[test]
    fn hs_endpoint_audit_is_exact() {
        let sample = log_grid_sample((1e-3, 1e3, 25), (1e-2, 1e2, 15));
        for q in [0.0, 1.0] {
            let a = constant_factor_audit(q, &rho_hs(q).unwrap(), &sample).unwrap();
            assert!((a.max_ratio - 1.0).abs() < 1e-9, "q={q}: {}", a.max_ratio);
            assert!(a.min_ratio >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn audit_zero_over_zero_is_one() {
        let a = constant_factor_audit(0.5, &rho_hs(0.5).unwrap(), &[(0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(a.max_ratio, 1.0);
    }
}
