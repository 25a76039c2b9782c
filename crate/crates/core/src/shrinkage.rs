//! Scalar shrinkage rules, their q-dependent wrapping, and empirical axiom checks.
//!
//! A shrinkage rule is a map `(x, α) ↦ ϱ(x, α)` with declared constants
//! `(c1, c2, rho, d, c3)` such that
//!
//! * `|x − ϱ(x, α)| ≤ c1·min(|x|, α)`,
//! * `|ϱ(x, α)| ≤ c2·|x|·|x/α|^rho` whenever `|x| ≤ d·α` (with `a^∞ = 0` for `a < 1`),
//! * and, for thresholding rules, `ϱ(x, α) = 0` whenever `|x| ≤ c3·α`.
//!
//! The constants are declared per rule and checked on grids, never inferred.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_q, Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Soft,
    Hard,
    /// Nonnegative garotte `x − α²/x` on `|x| > α`.
    Garotte,
    Hyperbolic,
    /// `x^{2n+1} / (x^{2n} + α^{2n})`.
    NDegree(u32),
    /// Polynomial inside `[−α, α]`, soft-like shift outside; smooth of order `2k`.
    KRule(u32),
    Diffusion1,
    Diffusion2,
    /// Firm shrinkage with the lower knee fixed and the upper knee given by `α`.
    Firm { alpha1: f64 },
    /// `x / (1 + α/|x|)`: at `q = 2` the wrapped rule is the exact ridge minimizer.
    QTwo,
    /// Hard/soft interpolation parameterized by `q ∈ [0, 1]`.
    HardSoft { q: f64, cq: f64 },
}

/// A shrinkage rule together with its declared axiom constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageRule {
    pub kind: RuleKind,
    pub c1: f64,
    pub c2: f64,
    /// Decay exponent; `f64::INFINITY` for thresholding rules.
    pub rho: f64,
    pub d: f64,
    /// Present iff the rule is a thresholding rule.
    pub c3: Option<f64>,
}

impl ShrinkageRule {
    const fn thresholding(kind: RuleKind, c3: f64) -> Self {
        ShrinkageRule { kind, c1: 1.0, c2: 1.0, rho: f64::INFINITY, d: c3, c3: Some(c3) }
    }

    const fn smooth(kind: RuleKind, rho: f64) -> Self {
        ShrinkageRule { kind, c1: 1.0, c2: 1.0, rho, d: 1.0, c3: None }
    }

    pub const fn soft() -> Self {
        Self::thresholding(RuleKind::Soft, 1.0)
    }

    pub const fn hard() -> Self {
        Self::thresholding(RuleKind::Hard, 1.0)
    }

    pub const fn garotte() -> Self {
        Self::thresholding(RuleKind::Garotte, 1.0)
    }

    pub const fn hyperbolic() -> Self {
        Self::thresholding(RuleKind::Hyperbolic, 1.0)
    }

    pub fn n_degree(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "n-degree garotte needs n >= 1"));
        }
        Ok(Self::smooth(RuleKind::NDegree(n), 2.0 * n as f64))
    }

    pub fn k_rule(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "k-rule needs k >= 1"));
        }
        Ok(Self::smooth(RuleKind::KRule(k), 2.0 * k as f64))
    }

    pub const fn diffusion1() -> Self {
        Self::smooth(RuleKind::Diffusion1, 1.0)
    }

    pub const fn diffusion2() -> Self {
        Self::smooth(RuleKind::Diffusion2, 1.0)
    }

    /// Firm shrinkage `(x, α) ↦ ϱ_f(x, α1, α)` with `α1` held fixed.
    ///
    /// Declared as a thresholding rule with `c3 = 1`. For `α > α1` the zero
    /// region stays `|x| < α1`, so the threshold and decay checks do fail there.
    pub fn firm(alpha1: f64) -> Result<Self> {
        if !(alpha1.is_finite() && alpha1 > 0.0) {
            return Err(Error::invalid("alpha1", format!("must be positive and finite, got {alpha1}")));
        }
        Ok(Self::thresholding(RuleKind::Firm { alpha1 }, 1.0))
    }

    pub const fn q_two() -> Self {
        Self::smooth(RuleKind::QTwo, 1.0)
    }

    /// Smallest `q` for which the constant-factor guarantee applies: `1/rho`.
    pub fn min_q(&self) -> f64 {
        1.0 / self.rho
    }

    pub fn is_thresholding(&self) -> bool {
        self.c3.is_some()
    }

    /// Evaluate `ϱ(x, α)`. `α` may be `0` or `+∞`.
    pub fn apply(&self, x: f64, alpha: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let ax = x.abs();
        let s = x.signum();
        match self.kind {
            RuleKind::Soft => {
                if ax > alpha {
                    s * (ax - alpha)
                } else {
                    0.0
                }
            }
            RuleKind::Hard => hard(x, alpha),
            RuleKind::Garotte => {
                if ax > alpha {
                    x - alpha * (alpha / x)
                } else {
                    0.0
                }
            }
            RuleKind::Hyperbolic => {
                if ax > alpha {
                    s * ((ax - alpha) * (ax + alpha)).sqrt()
                } else {
                    0.0
                }
            }
            RuleKind::NDegree(n) => x / (1.0 + (alpha / ax).powi(2 * n as i32)),
            RuleKind::KRule(k) => {
                let m = (2 * k + 1) as f64;
                if ax <= alpha {
                    x * (ax / alpha).powi(2 * k as i32) / m
                } else {
                    x - s * (alpha - alpha / m)
                }
            }
            RuleKind::Diffusion1 => {
                // 1 − 1/√(1+s) = (s/(1+s)) / (1 + 1/√(1+s)), s = 2(x/α)²
                let r = alpha / ax;
                let s2 = 2.0 / (r * r);
                let t = 1.0 / (1.0 + s2).sqrt();
                x * (1.0 / (1.0 + 1.0 / s2)) / (1.0 + t)
            }
            RuleKind::Diffusion2 => x * (-0.2 * (alpha / ax).powi(8)).exp(),
            RuleKind::Firm { alpha1 } => {
                if alpha <= alpha1 || ax > alpha {
                    hard(x, alpha)
                } else if ax >= alpha1 {
                    // α(|x|−α1)/(α−α1), finite as α → ∞
                    s * (ax - alpha1) / (1.0 - alpha1 / alpha)
                } else {
                    0.0
                }
            }
            RuleKind::QTwo => x / (1.0 + alpha / ax),
            RuleKind::HardSoft { q, cq } => {
                if ax > cq * alpha {
                    x - s * q * cq * alpha
                } else {
                    0.0
                }
            }
        }
    }

    /// The q-dependent version `x ↦ ϱ(x, α|x|^{q−1})`.
    pub fn wrap_q(self, q: f64) -> Result<QDependentRule> {
        check_q(q, 0.0, 2.0)?;
        Ok(QDependentRule { base: self, q })
    }
}

fn hard(x: f64, alpha: f64) -> f64 {
    if x.abs() > alpha {
        x
    } else {
        0.0
    }
}

impl fmt::Display for ShrinkageRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RuleKind::Soft => f.write_str("soft"),
            RuleKind::Hard => f.write_str("hard"),
            RuleKind::Garotte => f.write_str("garotte"),
            RuleKind::Hyperbolic => f.write_str("hyperbolic"),
            RuleKind::NDegree(n) => write!(f, "ndeg:{n}"),
            RuleKind::KRule(k) => write!(f, "k:{k}"),
            RuleKind::Diffusion1 => f.write_str("diff1"),
            RuleKind::Diffusion2 => f.write_str("diff2"),
            RuleKind::Firm { alpha1 } => write!(f, "firm:{alpha1}"),
            RuleKind::QTwo => f.write_str("q2"),
            RuleKind::HardSoft { q, .. } => write!(f, "hs:{q}"),
        }
    }
}

impl FromStr for ShrinkageRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownRule(s.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let int_arg = || arg.and_then(|a| a.parse::<u32>().ok()).ok_or_else(unknown);
        let real_arg = || arg.and_then(|a| a.parse::<f64>().ok()).ok_or_else(unknown);
        match (head, arg) {
            ("soft", None) => Ok(Self::soft()),
            ("hard", None) => Ok(Self::hard()),
            ("garotte", None) => Ok(Self::garotte()),
            ("hyperbolic", None) => Ok(Self::hyperbolic()),
            ("diff1", None) => Ok(Self::diffusion1()),
            ("diff2", None) => Ok(Self::diffusion2()),
            ("q2", None) => Ok(Self::q_two()),
            ("ndeg", Some(_)) => Self::n_degree(int_arg()?),
            ("k", Some(_)) => Self::k_rule(int_arg()?),
            ("firm", Some(_)) => Self::firm(real_arg()?),
            ("hs", Some(_)) => rho_hs(real_arg()?),
            _ => Err(unknown()),
        }
    }
}

/// Every named rule in the catalog, with its declared constants.
pub fn catalog() -> Vec<ShrinkageRule> {
    let ok = |r: Result<ShrinkageRule>| r.expect("catalog parameters are valid");
    vec![
        ShrinkageRule::soft(),
        ShrinkageRule::hard(),
        ShrinkageRule::garotte(),
        ShrinkageRule::hyperbolic(),
        ok(ShrinkageRule::n_degree(1)),
        ok(ShrinkageRule::n_degree(2)),
        ok(ShrinkageRule::k_rule(1)),
        ok(ShrinkageRule::k_rule(2)),
        ShrinkageRule::diffusion1(),
        ShrinkageRule::diffusion2(),
        ok(ShrinkageRule::firm(1.0)),
        ok(ShrinkageRule::firm(2.0)),
        ShrinkageRule::q_two(),
    ]
}

/// `c_q = 2^{q−2} (2−q)^{2−q} / (1−q)^{1−q}` on `[0, 1]`, with `c_0 = 1`, `c_1 = 1/2`.
pub fn cq(q: f64) -> Result<f64> {
    check_q(q, 0.0, 1.0)?;
    Ok(cq_unchecked(q))
}

fn cq_unchecked(q: f64) -> f64 {
    if q == 0.0 {
        return 1.0;
    }
    if q == 1.0 {
        return 0.5;
    }
    2f64.powf(q - 2.0) * (2.0 - q).powf(2.0 - q) / (1.0 - q).powf(1.0 - q)
}

/// The hard/soft interpolating rule `(x − sign(x)·q·c_q·α)·1{|x| > c_q·α}`.
///
/// `rho_hs(1)(x, α) = soft(x, α/2)`; wrapped at `q = 0` it equals `hard(x, √α)`.
pub fn rho_hs(q: f64) -> Result<ShrinkageRule> {
    check_q(q, 0.0, 1.0)?;
    let c = cq_unchecked(q);
    Ok(ShrinkageRule::thresholding(RuleKind::HardSoft { q, cq: c }, c))
}

/// `x ↦ base(x, α|x|^{q−1})`, and `0` at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QDependentRule {
    pub base: ShrinkageRule,
    pub q: f64,
}

impl QDependentRule {
    pub fn apply(&self, x: f64, alpha: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let a = if self.q == 1.0 { alpha } else { alpha * x.abs().powf(self.q - 1.0) };
        self.base.apply(x, a)
    }
}

/// Sample set for [`check_axioms`].
#[derive(Debug, Clone)]
pub struct AxiomGrid {
    pub xs: Vec<f64>,
    pub alphas: Vec<f64>,
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect(),
    }
}

impl Default for AxiomGrid {
    /// `x ∈ ±logspace(1e−4, 1e4, 200)`, `α ∈ logspace(1e−3, 1e3, 50)`.
    fn default() -> Self {
        let pos = logspace(1e-4, 1e4, 200);
        let mut xs: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
        xs.extend(pos);
        AxiomGrid { xs, alphas: logspace(1e-3, 1e3, 50) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    /// `|x − ϱ| ≤ c1·min(|x|, α)`
    Closeness,
    /// `|ϱ| ≤ c2·|x|·|x/α|^rho` on `|x| ≤ d·α`
    Decay,
    /// `ϱ = 0` on `|x| ≤ c3·α`
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub x: f64,
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub rule: String,
    pub points_checked: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, axiom: Axiom) -> usize {
        self.violations.iter().filter(|v| v.axiom == axiom).count()
    }
}

/// `|x/α|^rho` with `a^∞ = 0` for `a < 1` and `1^∞ = 1`.
fn decay_factor(ratio: f64, rho: f64) -> f64 {
    if rho.is_infinite() {
        match ratio.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => 0.0,
            Some(std::cmp::Ordering::Equal) => 1.0,
            _ => f64::INFINITY,
        }
    } else {
        ratio.powf(rho)
    }
}

/// Check every grid point against the declared constants of `rule`.
///
/// Slack per comparison is `1e−12·max(|x|, α)`; the threshold property is exact.
pub fn check_axioms(rule: &ShrinkageRule, grid: &AxiomGrid) -> AxiomReport {
    let per_alpha = par::map(&grid.alphas, |&alpha| {
        let mut out = Vec::new();
        for &x in &grid.xs {
            let y = rule.apply(x, alpha);
            let ax = x.abs();
            let slack = 1e-12 * ax.max(alpha);

            let lhs = (x - y).abs();
            let rhs = rule.c1 * ax.min(alpha);
            if !(lhs <= rhs + slack) {
                out.push(AxiomViolation { axiom: Axiom::Closeness, x, alpha, lhs, rhs });
            }

            if alpha > 0.0 && ax <= rule.d * alpha {
                let lhs = y.abs();
                let rhs = rule.c2 * ax * decay_factor(ax / alpha, rule.rho);
                if !(lhs <= rhs + slack) {
                    out.push(AxiomViolation { axiom: Axiom::Decay, x, alpha, lhs, rhs });
                }
            }

            if let Some(c3) = rule.c3 {
                if ax <= c3 * alpha && y != 0.0 {
                    out.push(AxiomViolation { axiom: Axiom::Threshold, x, alpha, lhs: y.abs(), rhs: 0.0 });
                }
            }
        }
        out
    });
    AxiomReport {
        rule: rule.to_string(),
        points_checked: grid.xs.len() * grid.alphas.len(),
        violations: per_alpha.into_iter().flatten().collect(),
    }
}
