//! The objectives
//!
//! * `J_q(h, g) = ‖h − L g‖² + Σ α_n |⟨g, f̃_n⟩|^q` over `g ∈ H`, and
//! * `K_q(h, ω) = ‖h − F ω‖² + Σ α_n |ω_n|^q` over coefficient sequences,
//!
//! with their closed-form minimizers up to a constant factor: apply the
//! q-dependent rule to `v = F̃^T L# h` (resp. `v = F̃^T h`) and synthesize.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{check_q, Error, Result};
use crate::frames::{BiFrame, ForwardProblem};
use crate::par;
use crate::prox::{check_hypothesis, oracle_scalar, penalty_term, ratio};
use crate::shrinkage::ShrinkageRule;

/// Relative tolerance of the `h ∈ range(L)` test.
pub const RANGE_RTOL: f64 = 1e-8;

/// Weights `α_n` with declared bounds `a ≤ α_n ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    values: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl Weights {
    pub fn new(values: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower <= upper) {
            return Err(Error::invalid("weight bounds", format!("need 0 <= a <= b < inf, got a = {lower}, b = {upper}")));
        }
        if let Some((n, a)) = values.iter().enumerate().find(|(_, a)| !(lower <= **a && **a <= upper)) {
            return Err(Error::invalid("weights", format!("alpha_{n} = {a} outside [{lower}, {upper}]")));
        }
        Ok(Weights { values, lower, upper })
    }

    pub fn uniform(n: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; n], alpha, alpha)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ α_n |ω_n|^q` with `0⁰ = 0`.
    pub fn penalty(&self, omega: &DVector<f64>, q: f64) -> f64 {
        omega.iter().zip(&self.values).map(|(&w, &a)| penalty_term(w, a, q)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Objective {
    pub residual_sq: f64,
    pub penalty: f64,
    pub total: f64,
}

impl Objective {
    fn new(residual_sq: f64, penalty: f64) -> Self {
        Objective { residual_sq, penalty, total: residual_sq + penalty }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalProblem {
    forward: ForwardProblem,
    biframe: BiFrame,
    weights: Weights,
    q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `L# L F ω̂`
    PulledBack,
    /// `F ω̂`
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer {
    pub g: DVector<f64>,
    /// The shrunk coefficients `ω̂`.
    pub coefficients: DVector<f64>,
}

impl VariationalProblem {
    pub fn new(forward: ForwardProblem, biframe: BiFrame, weights: Weights, q: f64) -> Result<Self> {
        check_q(q, 0.0, 2.0)?;
        if biframe.dim() != forward.domain_dim() {
            return Err(Error::Dimension(format!(
                "bi-frame lives in R^{}, operator domain is R^{}",
                biframe.dim(),
                forward.domain_dim()
            )));
        }
        if weights.len() != biframe.len() {
            return Err(Error::Dimension(format!("{} weights for {} frame vectors", weights.len(), biframe.len())));
        }
        Ok(VariationalProblem { forward, biframe, weights, q })
    }

    pub fn forward(&self) -> &ForwardProblem {
        &self.forward
    }

    pub fn biframe(&self) -> &BiFrame {
        &self.biframe
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eval_jq(&self, g: &DVector<f64>) -> Result<Objective> {
        if g.len() != self.forward.domain_dim() {
            return Err(Error::Dimension(format!("g has {} entries, expected {}", g.len(), self.forward.domain_dim())));
        }
        let r = self.forward.data() - self.forward.op() * g;
        Ok(Objective::new(r.norm_squared(), self.weights.penalty(&self.biframe.analyze(g), self.q)))
    }

    /// `v = F̃^T L# h`
    pub fn coefficients(&self) -> DVector<f64> {
        self.biframe.analyze(&(self.forward.pseudo_inverse() * self.forward.data()))
    }

    /// Closed-form minimizer of `J_q` up to a constant factor. Needs `h ∈ range(L)`.
    pub fn shrinkage_minimizer(&self, rule: &ShrinkageRule, variant: Variant) -> Result<Minimizer> {
        let rr = self.forward.range_residual();
        if !(rr <= RANGE_RTOL) {
            return Err(Error::OutOfRange(rr));
        }
        check_hypothesis(rule, self.q)?;
        let wrapped = rule.wrap_q(self.q)?;
        let v = self.coefficients();
        let omega = DVector::from_iterator(v.len(), v.iter().zip(self.weights.values()).map(|(&x, &a)| wrapped.apply(x, a)));
        let fo = self.biframe.synthesize(&omega);
        let g = match variant {
            Variant::Direct => fo,
            Variant::PulledBack => self.forward.pseudo_inverse() * (self.forward.op() * fo),
        };
        Ok(Minimizer { g, coefficients: omega })
    }

    /// `F ω*` where `ω*` is the componentwise oracle of the decoupled surrogate at `v`.
    pub fn decoupled_oracle_image(&self) -> DVector<f64> {
        let v = self.coefficients();
        let pairs: Vec<(f64, f64)> = v.iter().copied().zip(self.weights.values().iter().copied()).collect();
        let omega = par::map(&pairs, |&(x, a)| oracle_scalar(x, a, self.q));
        self.biframe.synthesize(&DVector::from_vec(omega))
    }
}

/// `K_q(h, ω) = ‖h − F ω‖² + Σ α_n |ω_n|^q`.
pub fn eval_kq(biframe: &BiFrame, h: &DVector<f64>, weights: &Weights, q: f64, omega: &DVector<f64>) -> Result<Objective> {
    if h.len() != biframe.dim() || omega.len() != biframe.len() || weights.len() != biframe.len() {
        return Err(Error::Dimension(format!(
            "h: {}, omega: {}, weights: {} for a {}x{} bi-frame",
            h.len(),
            omega.len(),
            weights.len(),
            biframe.dim(),
            biframe.len()
        )));
    }
    let r = h - biframe.synthesize(omega);
    Ok(Objective::new(r.norm_squared(), weights.penalty(omega, q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseVariant {
    /// `F̃^T F ω̂`
    Projected,
    /// `ω̂`
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseApproximation {
    pub omega: DVector<f64>,
    pub objective: Objective,
}

/// Closed-form minimizer of `K_q` up to a constant factor, from `v = F̃^T h`.
pub fn sparse_approximation(
    biframe: &BiFrame,
    h: &DVector<f64>,
    weights: &Weights,
    q: f64,
    rule: &ShrinkageRule,
    variant: SparseVariant,
) -> Result<SparseApproximation> {
    check_q(q, 0.0, 2.0)?;
    check_hypothesis(rule, q)?;
    if h.len() != biframe.dim() {
        return Err(Error::Dimension(format!("h has {} entries, bi-frame lives in R^{}", h.len(), biframe.dim())));
    }
    let wrapped = rule.wrap_q(q)?;
    let v = biframe.analyze(h);
    let shrunk = DVector::from_iterator(v.len(), v.iter().zip(weights.values()).map(|(&x, &a)| wrapped.apply(x, a)));
    let omega = match variant {
        SparseVariant::Plain => shrunk,
        SparseVariant::Projected => biframe.analyze(&biframe.synthesize(&shrunk)),
    };
    let objective = eval_kq(biframe, h, weights, q, &omega)?;
    Ok(SparseApproximation { omega, objective })
}

/// Seeded probe family for constant-factor audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSet {
    pub gaussian: usize,
    pub sparse: usize,
    /// Support size of the sparse probes.
    pub support: usize,
    pub seed: u64,
}

impl Default for ProbeSet {
    fn default() -> Self {
        ProbeSet { gaussian: 64, sparse: 64, support: 3, seed: 0 }
    }
}

impl ProbeSet {
    /// Gaussian and sparse vectors of length `n` at per-entry scale `scale`, then the zero vector.
    pub fn draw(&self, n: usize, scale: f64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.gaussian + self.sparse + 1);
        for _ in 0..self.gaussian {
            out.push(DVector::from_fn(n, |_, _| { let z: f64 = StandardNormal.sample(&mut rng); scale * z }));
        }
        let k = self.support.min(n);
        for _ in 0..self.sparse {
            let mut g = DVector::zeros(n);
            for i in sample(&mut rng, n, k) {
                let z: f64 = StandardNormal.sample(&mut rng);
                g[i] = scale * z;
            }
            out.push(g);
        }
        out.push(DVector::zeros(n));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioAudit {
    pub max_ratio: f64,
    /// Ratio against the decoupled oracle image alone.
    pub oracle_ratio: f64,
    pub probes: usize,
}

fn probe_scale(x: &DVector<f64>) -> f64 {
    let s = x.norm() / (x.len().max(1) as f64).sqrt();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn max_ratio(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, |m, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) })
}

/// `max_g J_q(h, ĝ) / J_q(h, g)` over the oracle image, random probes, zero and `ĝ` itself.
pub fn constant_factor_audit_jq(
    p: &VariationalProblem,
    rule: &ShrinkageRule,
    variant: Variant,
    probes: &ProbeSet,
) -> Result<RatioAudit> {
    let ghat = p.shrinkage_minimizer(rule, variant)?.g;
    let jhat = p.eval_jq(&ghat)?.total;
    let oracle = p.decoupled_oracle_image();
    let scale = probe_scale(&(p.forward().pseudo_inverse() * p.forward().data()));
    let mut set = vec![oracle, ghat];
    set.extend(probes.draw(p.forward().domain_dim(), scale));
    let ratios = par::try_map(&set, |g| p.eval_jq(g).map(|o| ratio(jhat, o.total).max(0.0)))?;
    Ok(RatioAudit { max_ratio: max_ratio(&ratios), oracle_ratio: ratios[0], probes: set.len() })
}

/// `max_ω K_q(h, ω̂) / K_q(h, ω)` over the decoupled oracle, random probes, zero and `ω̂`.
pub fn constant_factor_audit_kq(
    biframe: &BiFrame,
    h: &DVector<f64>,
    weights: &Weights,
    q: f64,
    rule: &ShrinkageRule,
    variant: SparseVariant,
    probes: &ProbeSet,
) -> Result<RatioAudit> {
    let approx = sparse_approximation(biframe, h, weights, q, rule, variant)?;
    let v = biframe.analyze(h);
    let oracle = DVector::from_iterator(v.len(), v.iter().zip(weights.values()).map(|(&x, &a)| oracle_scalar(x, a, q)));
    let mut set = vec![oracle, approx.omega.clone()];
    set.extend(probes.draw(biframe.len(), probe_scale(&v)));
    let khat = approx.objective.total;
    let ratios = par::try_map(&set, |w| eval_kq(biframe, h, weights, q, w).map(|o| ratio(khat, o.total).max(0.0)))?;
    Ok(RatioAudit { max_ratio: max_ratio(&ratios), oracle_ratio: ratios[0], probes: set.len() })
}

/// Convenience: identity forward operator on `R^n` with data `h`.
pub fn denoising(h: DVector<f64>) -> Result<ForwardProblem> {
    ForwardProblem::new(DMatrix::identity(h.len(), h.len()), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{mercedes_benz, Frame};
    use crate::shrinkage::{rho_hs, ShrinkageRule};

    fn identity_problem(h: Vec<f64>, alpha: f64, q: f64) -> VariationalProblem {
        let n = h.len();
        VariationalProblem::new(denoising(DVector::from_vec(h)).unwrap(), BiFrame::orthonormal(n), Weights::uniform(n, alpha).unwrap(), q)
            .unwrap()
    }

    #[test]
    fn zero_iterate_objective() {
        let p = identity_problem(vec![1.0, -2.0, 3.0], 0.5, 1.0);
        let o = p.eval_jq(&DVector::zeros(3)).unwrap();
        assert_eq!((o.residual_sq, o.penalty, o.total), (14.0, 0.0, 14.0));
    }

    #[test]
    fn exact_fit_objective() {
        let h = vec![1.0, -2.0, 0.0, 3.0];
        let p = identity_problem(h.clone(), 0.5, 0.0);
        let o = p.eval_jq(&DVector::from_vec(h)).unwrap();
        assert_eq!(o.residual_sq, 0.0);
        assert_eq!(o.penalty, 1.5);
    }

    #[test]
    fn identity_q_one_is_soft_with_half_alpha() {
        let h = vec![5.0, -0.5, 2.5, -3.0];
        let p = identity_problem(h.clone(), 4.0, 1.0);
        let g = p.shrinkage_minimizer(&rho_hs(1.0).unwrap(), Variant::Direct).unwrap().g;
        let soft = ShrinkageRule::soft();
        for (gi, hi) in g.iter().zip(&h) {
            assert_eq!(*gi, soft.apply(*hi, 2.0));
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let p = identity_problem(vec![0.0; 4], 1.0, 0.5);
        let g = p.shrinkage_minimizer(&rho_hs(0.5).unwrap(), Variant::PulledBack).unwrap().g;
        assert_eq!(g, DVector::zeros(4));
    }

    #[test]
    fn out_of_range_data_is_rejected() {
        let l = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let fwd = ForwardProblem::new(l, DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let p = VariationalProblem::new(fwd, BiFrame::orthonormal(2), Weights::uniform(2, 1.0).unwrap(), 1.0).unwrap();
        assert!(matches!(p.shrinkage_minimizer(&ShrinkageRule::soft(), Variant::Direct), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn weight_bounds_are_enforced() {
        assert!(Weights::new(vec![1.0, 3.0], 0.5, 2.0).is_err());
        assert!(Weights::new(vec![1.0, 2.0], 0.5, 2.0).is_ok());
        assert!(Weights::new(vec![], 2.0, 1.0).is_err());
    }

    #[test]
    fn orthonormal_kq_plain_is_exact_at_q_one() {
        let bf = BiFrame::orthonormal(3);
        let h = DVector::from_vec(vec![4.0, -1.0, 0.3]);
        let w = Weights::uniform(3, 2.0).unwrap();
        let a = constant_factor_audit_kq(&bf, &h, &w, 1.0, &rho_hs(1.0).unwrap(), SparseVariant::Plain, &ProbeSet::default()).unwrap();
        assert!((a.oracle_ratio - 1.0).abs() < 1e-9);
        assert!(a.max_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn kq_zero_data() {
        let bf = BiFrame::canonical(mercedes_benz()).unwrap();
        let w = Weights::uniform(3, 1.0).unwrap();
        let s = sparse_approximation(&bf, &DVector::zeros(2), &w, 0.5, &rho_hs(0.5).unwrap(), SparseVariant::Projected).unwrap();
        assert_eq!(s.omega, DVector::zeros(3));
        assert_eq!(s.objective.total, 0.0);
    }

    #[test]
    fn dimension_chain_is_checked() {
        let fwd = denoising(DVector::zeros(3)).unwrap();
        let bf = BiFrame::canonical(Frame::new(DMatrix::identity(2, 2)).unwrap()).unwrap();
        assert!(VariationalProblem::new(fwd, bf, Weights::uniform(2, 1.0).unwrap(), 1.0).is_err());
    }
}
