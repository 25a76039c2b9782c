//! Sparse shrinkage versus maximum entropy on one deconvolution problem.
//!
//! Protocol:
//!
//! 1. maxent β is the log-log curvature maximum over `beta_grid`;
//! 2. nonnegative Landweber α is the log-log curvature maximum over
//!    `alpha_grid`, each point started from zero;
//! 3. at that α the iteration is repeated from the maxent solution.
//!
//! `matched` is the Landweber grid point whose residual is closest, in
//! log scale, to the maxent residual.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::FredholmProblem;
use crate::modelsel::{max_curvature_alpha, sweep_alpha, CurvePoint, RegCurve, Scale, SweepMethod};
use crate::shrinkage::{logspace, rho_hs, ShrinkageRule};
use crate::solver::{count_above, landweber_shrink, landweber_shrink_from, LandweberConfig, MaxentConfig, StopReason, MAXENT_NONZERO_RTOL};

/// `n` log-spaced values from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite()) || self.n < 2 {
            return Err(Error::invalid("grid", format!("need 0 < lo < hi and n ≥ 2, got {self:?}")));
        }
        Ok(logspace(self.lo, self.hi, self.n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub q: f64,
    pub beta_grid: LogGrid,
    pub alpha_grid: LogGrid,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub scale: Scale,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            q: 0.3,
            beta_grid: LogGrid { lo: 1e-9, hi: 1e-2, n: 29 },
            alpha_grid: LogGrid { lo: 1e-7, hi: 1e-3, n: 17 },
            max_iters: 1_000_000,
            rel_tol: 1e-8,
            scale: Scale::LogLog,
        }
    }
}

impl CompareConfig {
    fn landweber(&self) -> Result<LandweberConfig> {
        let mut cfg = LandweberConfig::new(self.q, 1.0)?;
        cfg.nonneg = true;
        cfg.max_iters = self.max_iters;
        cfg.rel_tol = self.rel_tol;
        cfg.record_every = 1000;
        cfg.snapshot_every = 0;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    /// β for maxent, α for Landweber.
    pub parameter: f64,
    pub residual_norm: f64,
    /// Exact zeros excluded for shrinkage, entries above `1e−6·max` for maxent.
    pub nonzeros: usize,
    /// Indices of the largest entries, ascending; as many as the truth has spikes.
    pub peaks: Vec<usize>,
    pub solution: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarmStart {
    pub cold_objective: f64,
    pub warm_objective: f64,
    pub relative_difference: f64,
    pub cold_iterations: usize,
    pub warm_iterations: usize,
    pub cold_stop: StopReason,
    pub warm_stop: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub config: CompareConfig,
    pub noise_sigma: f64,
    pub snr: Option<f64>,
    pub truth_peaks: Vec<usize>,
    pub maxent: MethodSummary,
    pub landweber: MethodSummary,
    pub matched: MethodSummary,
    pub warm_start: WarmStart,
    pub maxent_curve: Vec<CurvePoint>,
    pub landweber_curve: Vec<CurvePoint>,
}

impl CompareReport {
    /// Summary table, one row per method.
    pub fn table(&self) -> String {
        let mut s = format!("{:<10} {:>12} {:>14} {:>9}  peaks\n", "method", "parameter", "residual", "nonzeros");
        for m in [&self.maxent, &self.landweber, &self.matched] {
            s.push_str(&format!("{:<10} {:>12.4e} {:>14.6e} {:>9}  {:?}\n", m.method, m.parameter, m.residual_norm, m.nonzeros, m.peaks));
        }
        s
    }
}

/// Indices of the `k` largest entries in ascending index order; ties go to the lower index.
pub fn top_peaks(g: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Whether every index in `truth` has some index of `found` within `tol`.
pub fn peaks_within(truth: &[usize], found: &[usize], tol: usize) -> bool {
    truth.iter().all(|&t| found.iter().any(|&f| t.abs_diff(f) <= tol))
}

fn summary(method: &str, curve: &RegCurve, index: usize, nonzeros: usize, k: usize) -> MethodSummary {
    let p = curve.points[index];
    let g = &curve.solutions[index];
    MethodSummary {
        method: method.into(),
        parameter: p.alpha,
        residual_norm: p.residual_sq.sqrt(),
        nonzeros,
        peaks: top_peaks(g, k),
        solution: g.iter().copied().collect(),
    }
}

pub fn compare(problem: &FredholmProblem, cfg: &CompareConfig) -> Result<CompareReport> {
    let t = problem.kernel_matrix()?;
    let f = problem.data()?;
    let truth = problem.ground_truth();
    let truth_peaks: Vec<usize> = truth.as_ref().map(|g| (0..g.len()).filter(|&i| g[i] != 0.0).collect()).unwrap_or_default();
    let k = if truth_peaks.is_empty() { 4 } else { truth_peaks.len() };
    let lw = cfg.landweber()?;

    let me_method = SweepMethod::Maxent { op: &t, data: &f, template: MaxentConfig::new(1.0) };
    let me_curve = sweep_alpha(&me_method, 1.0, &ShrinkageRule::soft(), &cfg.beta_grid.values()?)?;
    let me_sel = max_curvature_alpha(&me_curve, cfg.scale)?;
    let me_g = &me_curve.solutions[me_sel.index];
    let maxent = summary("maxent", &me_curve, me_sel.index, count_above(me_g, MAXENT_NONZERO_RTOL), k);

    let lw_method = SweepMethod::Landweber { op: &t, data: &f, template: lw };
    let lw_curve = sweep_alpha(&lw_method, cfg.q, &rho_hs(cfg.q)?, &cfg.alpha_grid.values()?)?;
    let lw_sel = max_curvature_alpha(&lw_curve, cfg.scale)?;
    let landweber = summary("landweber", &lw_curve, lw_sel.index, lw_curve.points[lw_sel.index].nonzeros, k);

    let log_gap = |p: &CurvePoint| (p.residual_sq.ln() - me_curve.points[me_sel.index].residual_sq.ln()).abs();
    let matched_index = (0..lw_curve.points.len())
        .min_by(|&a, &b| log_gap(&lw_curve.points[a]).total_cmp(&log_gap(&lw_curve.points[b])))
        .expect("a selected curve has points");
    let matched = summary("matched", &lw_curve, matched_index, lw_curve.points[matched_index].nonzeros, k);

    let at = LandweberConfig { alpha: lw_sel.alpha, ..lw };
    let cold = landweber_shrink(&t, &f, &at)?;
    let warm = landweber_shrink_from(&t, &f, &at, me_g)?;
    let warm_start = WarmStart {
        cold_objective: cold.objective(),
        warm_objective: warm.objective(),
        relative_difference: (warm.objective() - cold.objective()).abs() / cold.objective().abs().max(f64::MIN_POSITIVE),
        cold_iterations: cold.iterations,
        warm_iterations: warm.iterations,
        cold_stop: cold.stop,
        warm_stop: warm.stop,
    };

    Ok(CompareReport {
        config: *cfg,
        noise_sigma: problem.noise_sigma,
        snr: if truth.is_some() && problem.noise_sigma > 0.0 { Some(problem.snr()?) } else { None },
        truth_peaks,
        maxent,
        landweber,
        matched,
        warm_start,
        maxent_curve: me_curve.points,
        landweber_curve: lw_curve.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_peaks_orders_and_breaks_ties_low() {
        let g = DVector::from_vec(vec![0.0, 3.0, 1.0, 3.0, 2.0]);
        assert_eq!(top_peaks(&g, 2), vec![1, 3]);
        assert_eq!(top_peaks(&g, 3), vec![1, 3, 4]);
        assert_eq!(top_peaks(&DVector::from_vec(vec![1.0, 1.0, 1.0]), 1), vec![0]);
    }

    #[test]
    fn peak_tolerance() {
        assert!(peaks_within(&[45, 55], &[44, 56], 1));
        assert!(!peaks_within(&[45, 55], &[43, 55], 1));
        assert!(peaks_within(&[], &[1], 0));
    }

    #[test]
    fn grid_validation() {
        assert!(LogGrid { lo: 0.0, hi: 1.0, n: 3 }.values().is_err());
        assert!(LogGrid { lo: 1.0, hi: 1.0, n: 3 }.values().is_err());
        assert_eq!(LogGrid { lo: 1e-2, hi: 1.0, n: 3 }.values().unwrap().len(), 3);
    }

    #[test]
    fn config_json_fills_defaults() {
        let c: CompareConfig = serde_json::from_str(r#"{"q": 0.5, "scale": "linear"}"#).unwrap();
        assert_eq!(c.q, 0.5);
        assert_eq!(c.scale, Scale::Linear);
        assert_eq!(c.alpha_grid, CompareConfig::default().alpha_grid);
        assert!(serde_json::from_str::<CompareConfig>(r#"{"qq": 0.5}"#).is_err());
    }
}
