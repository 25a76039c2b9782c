//! Shrinked Landweber iteration and the maximum-entropy baseline.
//!
//! Landweber step, with `S̃` the q-dependent shrinkage applied componentwise:
//!
//! ```text
//! g^{j+1} = S̃_α( g^j + T^T (f − T g^j) ),   g^0 = 0
//! ```
//!
//! With `normalize_operator` the iteration runs on `(cT, cf)` with
//! `c = 0.99/‖T‖`. That problem is `c²` times the original one, so the shrink
//! uses `c²α`; iterates, residuals and objectives are all in original units.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_q, Error, Result};
use crate::frames::LinearOperator;
use crate::prox::{check_hypothesis, penalty_term};
use crate::shrinkage::{rho_hs, QDependentRule, ShrinkageRule};

pub const DEFAULT_MAX_ITERS: usize = 100_000;
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Target spectral norm after normalization.
pub const NORM_TARGET: f64 = 0.99;
pub const MONOTONE_RTOL: f64 = 1e-10;
/// Relative threshold for counting maxent entries as nonzero.
pub const MAXENT_NONZERO_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandweberConfig {
    pub q: f64,
    pub alpha: f64,
    pub rule: ShrinkageRule,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub nonneg: bool,
    pub normalize_operator: bool,
    /// Scalar trace record spacing; the final iterate is always recorded.
    pub record_every: usize,
    /// Iterate snapshot spacing; `0` disables snapshots.
    pub snapshot_every: usize,
}

impl LandweberConfig {
    /// Defaults with the interpolating rule `rho_hs(q)`.
    pub fn new(q: f64, alpha: f64) -> Result<Self> {
        Ok(LandweberConfig {
            q,
            alpha,
            rule: rho_hs(q)?,
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            nonneg: false,
            normalize_operator: true,
            record_every: 1,
            snapshot_every: 100,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_q(self.q, 0.0, 1.0)?;
        check_hypothesis(&self.rule, self.q)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be finite and nonnegative, got {}", self.alpha)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub residual_norm: f64,
    pub penalty: f64,
    pub objective: f64,
    pub nonzeros: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub snapshots: Vec<(usize, DVector<f64>)>,
    pub iterate: DVector<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    /// The normalization factor `c` (1 without normalization).
    pub scale: f64,
}

impl SolverTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always records the final iterate")
    }

    pub fn objective(&self) -> f64 {
        self.last().objective
    }

    pub fn residual_norm(&self) -> f64 {
        self.last().residual_norm
    }

    pub fn nonzeros(&self) -> usize {
        self.last().nonzeros
    }
}

/// `‖T‖₂` by power iteration on `T^T T`, stopped at relative change `rtol`.
pub fn spectral_norm<O: LinearOperator + ?Sized>(op: &O, rtol: f64, max_iters: usize) -> f64 {
    let n = op.cols();
    // a fixed, non-symmetric start vector: deterministic and unlikely to be orthogonal to the top singular vector
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract());
    x /= x.norm();
    let mut tx = DVector::zeros(op.rows());
    let mut y = DVector::zeros(n);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        op.apply(&x, &mut tx);
        op.apply_adjoint(&tx, &mut y);
        let next = y.norm();
        if next == 0.0 {
            return 0.0;
        }
        x.copy_from(&y);
        x /= next;
        let done = (next - lambda).abs() <= rtol * next;
        lambda = next;
        if done {
            break;
        }
    }
    lambda.sqrt()
}

struct Shrink {
    rule: QDependentRule,
    alpha: f64,
    nonneg: bool,
}

impl Shrink {
    #[inline]
    fn apply(&self, x: f64) -> f64 {
        if self.nonneg && x < 0.0 {
            0.0
        } else {
            self.rule.apply(x, self.alpha)
        }
    }
}

fn penalty(g: &DVector<f64>, alpha: f64, q: f64) -> f64 {
    g.iter().map(|&x| penalty_term(x, alpha, q)).sum()
}

pub fn count_nonzero(g: &DVector<f64>) -> usize {
    g.iter().filter(|x| **x != 0.0).count()
}

/// Entries above `rtol · max|g|`.
pub fn count_above(g: &DVector<f64>, rtol: f64) -> usize {
    let cut = rtol * g.amax();
    g.iter().filter(|x| x.abs() > cut).count()
}

/// Landweber iteration from `g^0 = 0`.
pub fn landweber_shrink<O: LinearOperator + ?Sized>(op: &O, f: &DVector<f64>, cfg: &LandweberConfig) -> Result<SolverTrace> {
    landweber_shrink_from(op, f, cfg, &DVector::zeros(op.cols()))
}

/// Landweber iteration from a given starting point.
pub fn landweber_shrink_from<O: LinearOperator + ?Sized>(
    op: &O,
    f: &DVector<f64>,
    cfg: &LandweberConfig,
    start: &DVector<f64>,
) -> Result<SolverTrace> {
    cfg.validate()?;
    if f.len() != op.rows() || start.len() != op.cols() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, data has {} entries, start has {}",
            op.rows(),
            op.cols(),
            f.len(),
            start.len()
        )));
    }
    let scale = if cfg.normalize_operator {
        let norm = spectral_norm(op, 1e-6, 100_000);
        if norm > 0.0 {
            NORM_TARGET / norm
        } else {
            1.0
        }
    } else {
        1.0
    };
    let c2 = scale * scale;
    let shrink = Shrink { rule: cfg.rule.wrap_q(cfg.q)?, alpha: c2 * cfg.alpha, nonneg: cfg.nonneg };

    // For an explicit matrix the step is g + c²(T^T f − T^T T g): one product
    // with the precomputed normal matrix instead of two with T.
    let normal = op.dense().map(|t| (t.tr_mul(t), t.tr_mul(f)));

    let mut g = start.clone();
    let mut next = DVector::zeros(op.cols());
    let mut tg = DVector::zeros(op.rows());
    let mut grad = DVector::zeros(op.cols());
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;

    let record = |j: usize, g: &DVector<f64>, resid_sq: f64| {
        let p = penalty(g, cfg.alpha, cfg.q);
        TraceRecord { iteration: j, residual_norm: resid_sq.sqrt(), penalty: p, objective: resid_sq + p, nonzeros: count_nonzero(g) }
    };
    // next <- S̃(g + c² T^T(f − T g)); returns ‖next − g‖², or None on overflow.
    // Without a normal matrix, tg must hold f − T g.
    let step = |g: &DVector<f64>, tg: &DVector<f64>, grad: &mut DVector<f64>, next: &mut DVector<f64>| {
        match &normal {
            Some((gram, tf)) => {
                grad.copy_from(tf);
                grad.gemv(-1.0, gram, g, 1.0);
            }
            None => op.apply_adjoint(tg, grad),
        }
        let mut delta_sq = 0.0;
        for i in 0..g.len() {
            let y = shrink.apply(g[i] + c2 * grad[i]);
            if !y.is_finite() {
                return None;
            }
            let d = y - g[i];
            delta_sq += d * d;
            next[i] = y;
        }
        Some(delta_sq)
    };
    let residual = |g: &DVector<f64>, tg: &mut DVector<f64>| {
        op.apply(g, tg);
        tg.zip_apply(f, |t, fi| *t = fi - *t);
    };

    for j in 0..cfg.max_iters {
        let recording = j % cfg.record_every == 0;
        if recording || normal.is_none() {
            residual(&g, &mut tg);
        }
        if recording {
            records.push(record(j, &g, tg.norm_squared()));
        }
        if cfg.snapshot_every > 0 && j % cfg.snapshot_every == 0 {
            snapshots.push((j, g.clone()));
        }
        let delta_sq = step(&g, &tg, &mut grad, &mut next).ok_or(Error::Diverged { iteration: j + 1 })?;
        let gnorm = g.norm();
        std::mem::swap(&mut g, &mut next);
        iterations = j + 1;
        if delta_sq.sqrt() <= cfg.rel_tol * gnorm.max(1.0) {
            stop = StopReason::Converged;
            break;
        }
    }
    // the cap may land exactly on a fixed point
    if stop == StopReason::MaxIters {
        residual(&g, &mut tg);
        if let Some(delta_sq) = step(&g, &tg, &mut grad, &mut next) {
            if delta_sq.sqrt() <= cfg.rel_tol * g.norm().max(1.0) {
                stop = StopReason::Converged;
            }
        }
    }

    op.apply(&g, &mut tg);
    tg.zip_apply(f, |t, fi| *t = fi - *t);
    let resid_sq = tg.norm_squared();
    if !resid_sq.is_finite() {
        return Err(Error::Diverged { iteration: iterations });
    }
    if records.last().map(|r| r.iteration) != Some(iterations) {
        records.push(record(iterations, &g, resid_sq));
    }
    Ok(SolverTrace { records, snapshots, iterate: g, iterations, stop, scale })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// `(iteration, objective increase)` for each violation.
    pub violations: Vec<(usize, f64)>,
}

/// Whether the recorded objective is non-increasing, up to a relative
/// `1e−10`, from the first update on.
pub fn objective_monotone_check(trace: &SolverTrace) -> MonotoneReport {
    let mut violations = Vec::new();
    for w in trace.records.windows(2).skip(1) {
        let (a, b) = (w[0].objective, w[1].objective);
        if b - a > MONOTONE_RTOL * a.abs().max(f64::MIN_POSITIVE) {
            violations.push((w[1].iteration, b - a));
        }
    }
    MonotoneReport { monotone: violations.is_empty(), violations }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxentConfig {
    pub beta: f64,
    pub max_iters: usize,
    /// Relative objective change that declares convergence.
    pub tol: f64,
    /// Positivity floor.
    pub floor: f64,
}

impl MaxentConfig {
    pub fn new(beta: f64) -> Self {
        MaxentConfig { beta, max_iters: 500, tol: 1e-12, floor: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxentSolution {
    pub g: DVector<f64>,
    pub objective: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl MaxentSolution {
    /// Entries above `1e−6·max`.
    pub fn nonzeros(&self) -> usize {
        count_above(&self.g, MAXENT_NONZERO_RTOL)
    }
}

/// `Σ g ln g`
pub fn entropy(g: &DVector<f64>) -> f64 {
    g.iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 }).sum()
}

/// `‖f − T g‖² + β Σ g ln g`
pub fn maxent_objective(t: &DMatrix<f64>, f: &DVector<f64>, beta: f64, g: &DVector<f64>) -> f64 {
    (f - t * g).norm_squared() + beta * entropy(g)
}

/// Minimize `‖f − T g‖² + β Σ g ln g` over `g ≥ floor`.
///
/// Projected Newton: coordinates pinned at the floor with a positive gradient
/// are held fixed, the remaining ones take a Newton step on
/// `2 T^T T + β diag(1/g)`, and a projected Armijo search sets the length.
pub fn maxent_solve(t: &DMatrix<f64>, f: &DVector<f64>, cfg: &MaxentConfig) -> Result<MaxentSolution> {
    if !(cfg.beta > 0.0 && cfg.beta.is_finite()) {
        return Err(Error::invalid("beta", format!("must be positive, got {}", cfg.beta)));
    }
    if !(cfg.floor > 0.0) || !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return Err(Error::invalid("maxent config", "floor and tol must be positive, max_iters at least 1"));
    }
    if f.len() != t.nrows() {
        return Err(Error::Dimension(format!("operator has {} rows, data has {}", t.nrows(), f.len())));
    }
    let n = t.ncols();
    let gram = t.tr_mul(t);
    let tf = t.tr_mul(f);
    let beta = cfg.beta;
    let eps = cfg.floor;
    let phi = |g: &DVector<f64>| maxent_objective(t, f, beta, g);

    let mass: f64 = t.sum();
    let flat = if mass > 0.0 { (f.sum() / mass).max(eps) } else { 1.0 };
    let mut g = DVector::from_element(n, flat);
    let mut obj = phi(&g);
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let grad = 2.0 * (&gram * &g - &tf) + g.map(|x| beta * (x.ln() + 1.0));
        let free: Vec<usize> = (0..n).filter(|&i| !(g[i] <= eps * (1.0 + 1e-9) && grad[i] > 0.0)).collect();
        let mut d = DVector::zeros(n);
        if !free.is_empty() {
            let k = free.len();
            let h = DMatrix::from_fn(k, k, |a, b| {
                let (i, j) = (free[a], free[b]);
                2.0 * gram[(i, j)] + if i == j { beta / g[i] } else { 0.0 }
            });
            let rhs = DVector::from_fn(k, |a, _| -grad[free[a]]);
            let step = match h.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => rhs,
            };
            for (a, &i) in free.iter().enumerate() {
                d[i] = step[a];
            }
        }

        let mut tstep = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = (&g + tstep * &d).map(|x| x.max(eps));
            let c = phi(&cand);
            let decrease = grad.dot(&(&cand - &g));
            if c <= obj + 1e-4 * decrease {
                accepted = Some((cand, c));
                break;
            }
            tstep *= 0.5;
        }
        let Some((cand, c)) = accepted else {
            // no descent left at double precision
            converged = true;
            break;
        };
        if !c.is_finite() {
            return Err(Error::Diverged { iteration: it + 1 });
        }
        let change = (obj - c).abs();
        g = cand;
        obj = c;
        if change <= cfg.tol * obj.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let residual_norm = (f - t * &g).norm();
    Ok(MaxentSolution { g, objective: obj, residual_norm, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shrinkage::ShrinkageRule;

    #[test]
    fn identity_q_one_converges_in_one_step() {
        let f = DVector::from_vec(vec![3.0, -0.5, 1.0, -4.0]);
        let mut cfg = LandweberConfig::new(1.0, 2.0).unwrap();
        cfg.normalize_operator = false;
        let tr = landweber_shrink(&DMatrix::<f64>::identity(4, 4), &f, &cfg).unwrap();
        let soft = ShrinkageRule::soft();
        let expected = f.map(|x| soft.apply(x, 1.0));
        assert_eq!(tr.iterate, expected);
        assert_eq!(tr.stop, StopReason::Converged);
        assert_eq!(tr.iterations, 2);
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = LandweberConfig::new(0.5, 1.0).unwrap();
        let t = DMatrix::from_fn(3, 5, |i, j| (i + 2 * j) as f64 * 0.1 + 0.05);
        let tr = landweber_shrink(&t, &DVector::zeros(3), &cfg).unwrap();
        assert_eq!(tr.iterate, DVector::zeros(5));
        assert_eq!(tr.iterations, 1);
    }

    #[test]
    fn normalization_reaches_target() {
        let t = DMatrix::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7);
        let exact = t.singular_values().max();
        let est = spectral_norm(&t, 1e-12, 100_000);
        assert!((est - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn nonneg_clamps_negative_arguments() {
        let f = DVector::from_vec(vec![3.0, -3.0]);
        let mut cfg = LandweberConfig::new(1.0, 0.1).unwrap();
        cfg.nonneg = true;
        cfg.normalize_operator = false;
        let tr = landweber_shrink(&DMatrix::<f64>::identity(2, 2), &f, &cfg).unwrap();
        assert_eq!(tr.iterate[1], 0.0);
        assert!(tr.iterate[0] > 0.0);
    }

    #[test]
    fn divergence_is_reported() {
        let f = DVector::from_vec(vec![1.0, 1.0]);
        let mut cfg = LandweberConfig::new(1.0, 0.0).unwrap();
        cfg.normalize_operator = false;
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![1e3, 1.0]));
        assert!(matches!(landweber_shrink(&t, &f, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(LandweberConfig::new(1.5, 1.0).is_err());
        let mut cfg = LandweberConfig::new(0.5, 1.0).unwrap();
        cfg.rule = ShrinkageRule::n_degree(1).unwrap();
        assert!(cfg.validate().is_ok());
        cfg.q = 0.3;
        assert!(matches!(cfg.validate(), Err(Error::HypothesisViolated { .. })));
    }

    #[test]
    fn single_record_trace_is_monotone() {
        let tr = SolverTrace {
            records: vec![TraceRecord { iteration: 0, residual_norm: 1.0, penalty: 0.0, objective: 1.0, nonzeros: 0 }],
            snapshots: vec![],
            iterate: DVector::zeros(1),
            iterations: 0,
            stop: StopReason::MaxIters,
            scale: 1.0,
        };
        assert!(objective_monotone_check(&tr).monotone);
    }

    #[test]
    fn maxent_identity_matches_scalar_roots() {
        let gstar = 0.7;
        let beta = 0.3;
        let f = DVector::from_element(4, gstar);
        let sol = maxent_solve(&DMatrix::identity(4, 4), &f, &MaxentConfig::new(beta)).unwrap();
        // Newton on 2(g − g*) + β(ln g + 1) = 0
        let mut r: f64 = gstar;
        for _ in 0..100 {
            r -= (2.0 * (r - gstar) + beta * (r.ln() + 1.0)) / (2.0 + beta / r);
        }
        assert!(sol.converged);
        for x in sol.g.iter() {
            assert!((x - r).abs() < 1e-8, "{x} vs {r}");
        }
    }

    #[test]
    fn maxent_small_beta_tends_to_clipped_data() {
        let f = DVector::from_vec(vec![0.5, -0.2, 2.0]);
        let sol = maxent_solve(&DMatrix::identity(3, 3), &f, &MaxentConfig::new(1e-12)).unwrap();
        assert!((sol.g[0] - 0.5).abs() < 1e-9);
        assert!((sol.g[2] - 2.0).abs() < 1e-9);
        assert_eq!(sol.g[1], 1e-12);
        assert!(sol.g.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn maxent_rejects_bad_beta() {
        let t = DMatrix::identity(2, 2);
        let f = DVector::zeros(2);
        assert!(maxent_solve(&t, &f, &MaxentConfig::new(0.0)).is_err());
        assert!(maxent_solve(&t, &f, &MaxentConfig::new(f64::NAN)).is_err());
    }
}
