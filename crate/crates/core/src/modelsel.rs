//! Regularization-parameter selection on the curve `α ↦ (residual², penalty)`.
//!
//! The selected α maximizes the signed three-point (circumscribed-circle)
//! curvature of the curve traversed in increasing α. With residual on the
//! horizontal axis, the corner of an L-shaped curve has positive curvature.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_q, Error, Result};
use crate::par;
use crate::shrinkage::{rho_hs, ShrinkageRule};
use crate::solver::{count_above, entropy, landweber_shrink, maxent_solve, LandweberConfig, MaxentConfig, MAXENT_NONZERO_RTOL};
use crate::variational::{Variant, VariationalProblem, Weights};

/// Relative curvature difference treated as a tie.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub residual_sq: f64,
    pub penalty: f64,
    /// `residual_sq + alpha·penalty`
    pub objective: f64,
    pub nonzeros: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegCurve {
    pub q: f64,
    pub points: Vec<CurvePoint>,
    /// Minimizers, parallel to `points`, when the sweep produced them.
    pub solutions: Vec<DVector<f64>>,
    /// Places where the residual decreased as α grew.
    pub warnings: Vec<String>,
}

impl RegCurve {
    /// Sorts by α; α must be positive and distinct.
    pub fn new(q: f64, points: Vec<CurvePoint>) -> Result<Self> {
        let solutions = Vec::new();
        Self::with_solutions(q, points, solutions)
    }

    pub fn with_solutions(q: f64, points: Vec<CurvePoint>, solutions: Vec<DVector<f64>>) -> Result<Self> {
        if !solutions.is_empty() && solutions.len() != points.len() {
            return Err(Error::Dimension(format!("{} solutions for {} points", solutions.len(), points.len())));
        }
        if points.iter().any(|p| !(p.alpha > 0.0 && p.alpha.is_finite())) {
            return Err(Error::invalid("alphas", "must be positive and finite"));
        }
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| points[a].alpha.total_cmp(&points[b].alpha));
        if idx.windows(2).any(|w| points[w[0]].alpha == points[w[1]].alpha) {
            return Err(Error::invalid("alphas", "must be distinct"));
        }
        let sorted: Vec<CurvePoint> = idx.iter().map(|&i| points[i]).collect();
        let sols = if solutions.is_empty() { solutions } else { idx.iter().map(|&i| solutions[i].clone()).collect() };
        let warnings = sorted
            .windows(2)
            .filter(|w| w[1].residual_sq < w[0].residual_sq * (1.0 - 1e-12))
            .map(|w| format!("residual decreased from {:e} to {:e} between alpha {:e} and {:e}", w[0].residual_sq, w[1].residual_sq, w[0].alpha, w[1].alpha))
            .collect();
        Ok(RegCurve { q, points: sorted, solutions: sols, warnings })
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.alpha).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    LogLog,
    Linear,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" => Ok(Scale::LogLog),
            "linear" => Ok(Scale::Linear),
            _ => Err(Error::invalid("scale", format!("expected `loglog` or `linear`, got `{s}`"))),
        }
    }
}

/// Signed curvature of the circle through three points; `None` if two coincide.
pub fn three_point_curvature(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<f64> {
    let (ux, uy) = (b.0 - a.0, b.1 - a.1);
    let (vx, vy) = (c.0 - b.0, c.1 - b.1);
    let (wx, wy) = (c.0 - a.0, c.1 - a.1);
    let denom = (ux * ux + uy * uy).sqrt() * (vx * vx + vy * vy).sqrt() * (wx * wx + wy * wy).sqrt();
    if !(denom > 0.0) || !denom.is_finite() {
        return None;
    }
    Some(2.0 * (ux * vy - uy * vx) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub alpha: f64,
    pub index: usize,
    /// Per point; `None` for endpoints and points dropped by the scale.
    pub curvature: Vec<Option<f64>>,
}

/// Curvature at each interior point of the curve in the given scale.
///
/// In log-log scale, points with a non-positive coordinate are skipped.
pub fn curvature(curve: &RegCurve, scale: Scale) -> Vec<Option<f64>> {
    let coords: Vec<Option<(f64, f64)>> = curve
        .points
        .iter()
        .map(|p| match scale {
            Scale::Linear => Some((p.residual_sq, p.penalty)),
            Scale::LogLog if p.residual_sq > 0.0 && p.penalty > 0.0 => Some((p.residual_sq.ln(), p.penalty.ln())),
            Scale::LogLog => None,
        })
        .collect();
    let usable: Vec<usize> = (0..coords.len()).filter(|&i| coords[i].is_some()).collect();
    let mut out = vec![None; coords.len()];
    for w in usable.windows(3) {
        let (a, b, c) = (coords[w[0]].unwrap(), coords[w[1]].unwrap(), coords[w[2]].unwrap());
        out[w[1]] = three_point_curvature(a, b, c);
    }
    out
}

/// The grid α of maximal positive curvature; ties go to the smallest α.
pub fn max_curvature_alpha(curve: &RegCurve, scale: Scale) -> Result<Selection> {
    if curve.points.len() < 5 {
        return Err(Error::NoCurvature(format!("need at least 5 points, got {}", curve.points.len())));
    }
    let kappa = curvature(curve, scale);
    let best = kappa.iter().flatten().copied().filter(|k| k.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let scale_ref = kappa.iter().flatten().map(|k| k.abs()).fold(0.0, f64::max);
    if !(best > 1e-12 * scale_ref.max(f64::MIN_POSITIVE)) || best <= 0.0 {
        return Err(Error::NoCurvature("the curve has no positively curved interior point (collinear or degenerate)".into()));
    }
    let index = kappa
        .iter()
        .position(|k| matches!(k, Some(v) if *v >= best - TIE_RTOL * best.abs()))
        .expect("best is attained");
    Ok(Selection { alpha: curve.points[index].alpha, index, curvature: kappa })
}

/// How each point of a sweep is computed.
#[derive(Debug, Clone, Copy)]
pub enum SweepMethod<'a> {
    /// Closed-form shrinkage minimizer with uniform weights α; penalty is `Σ |⟨g, f̃_n⟩|^q`.
    ClosedForm { problem: &'a VariationalProblem, variant: Variant },
    /// Landweber from zero with the template's settings; penalty is `Σ |g_n|^q`.
    Landweber { op: &'a DMatrix<f64>, data: &'a DVector<f64>, template: LandweberConfig },
    /// Maximum entropy with β = α; penalty is `Σ g ln g + N/e ≥ 0`.
    Maxent { op: &'a DMatrix<f64>, data: &'a DVector<f64>, template: MaxentConfig },
}

fn sweep_point(method: &SweepMethod, q: f64, rule: &ShrinkageRule, alpha: f64) -> Result<(CurvePoint, DVector<f64>)> {
    match *method {
        SweepMethod::ClosedForm { problem, variant } => {
            let n = problem.biframe().len();
            let p = VariationalProblem::new(problem.forward().clone(), problem.biframe().clone(), Weights::uniform(n, alpha)?, q)?;
            let g = p.shrinkage_minimizer(rule, variant)?.g;
            let o = p.eval_jq(&g)?;
            let coeffs = p.biframe().analyze(&g);
            let penalty = if alpha > 0.0 { o.penalty / alpha } else { 0.0 };
            Ok((CurvePoint { alpha, residual_sq: o.residual_sq, penalty, objective: o.total, nonzeros: crate::solver::count_nonzero(&coeffs) }, g))
        }
        SweepMethod::Landweber { op, data, template } => {
            let cfg = LandweberConfig { q, alpha, rule: *rule, ..template };
            let tr = landweber_shrink(op, data, &cfg)?;
            let last = *tr.last();
            let penalty = if alpha > 0.0 { last.penalty / alpha } else { 0.0 };
            Ok((
                CurvePoint { alpha, residual_sq: last.residual_norm.powi(2), penalty, objective: last.objective, nonzeros: last.nonzeros },
                tr.iterate,
            ))
        }
        SweepMethod::Maxent { op, data, template } => {
            let sol = maxent_solve(op, data, &MaxentConfig { beta: alpha, ..template })?;
            let shifted = entropy(&sol.g) + sol.g.len() as f64 / std::f64::consts::E;
            Ok((
                CurvePoint {
                    alpha,
                    residual_sq: sol.residual_norm.powi(2),
                    penalty: shifted,
                    objective: sol.objective,
                    nonzeros: count_above(&sol.g, MAXENT_NONZERO_RTOL),
                },
                sol.g,
            ))
        }
    }
}

/// One solve per α, in parallel; errors carry the offending α.
pub fn sweep_alpha(method: &SweepMethod, q: f64, rule: &ShrinkageRule, alphas: &[f64]) -> Result<RegCurve> {
    check_q(q, 0.0, 2.0)?;
    if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::invalid("alphas", "must be positive and finite"));
    }
    if alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("alphas", "must be strictly increasing"));
    }
    let results = par::try_map(alphas, |&a| sweep_point(method, q, rule, a).map_err(|e| Error::AtAlpha { alpha: a, source: Box::new(e) }))?;
    let (points, solutions): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    RegCurve::with_solutions(q, points, solutions)
}

/// The grid α whose minimizer is closest to `truth` in the 2-norm.
pub fn oracle_alpha(curve: &RegCurve, truth: &DVector<f64>) -> Result<f64> {
    if curve.solutions.is_empty() {
        return Err(Error::invalid("curve", "has no stored solutions"));
    }
    let (i, _) = curve
        .solutions
        .iter()
        .map(|g| (g - truth).norm())
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, d)| if d < best.1 { (i, d) } else { best });
    Ok(curve.points[i].alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QSweepRow {
    pub q: f64,
    pub alpha: f64,
    pub residual_sq: f64,
    pub nonzeros: usize,
}

/// Per `q`: sweep α with `rho_hs(q)`, pick the curvature maximum, record the summary.
pub fn q_sweep(method: &SweepMethod, q_grid: &[f64], alphas: &[f64], scale: Scale) -> Result<Vec<QSweepRow>> {
    let mut rows = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        check_q(q, 0.0, 1.0)?;
        let curve = sweep_alpha(method, q, &rho_hs(q)?, alphas)?;
        let sel = max_curvature_alpha(&curve, scale)?;
        let p = curve.points[sel.index];
        rows.push(QSweepRow { q, alpha: sel.alpha, residual_sq: p.residual_sq, nonzeros: p.nonzeros });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve_from(xy: &[(f64, f64)]) -> RegCurve {
        let pts = xy
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| CurvePoint { alpha: (i + 1) as f64, residual_sq: x, penalty: y, objective: x + y, nonzeros: 0 })
            .collect();
        RegCurve::new(1.0, pts).unwrap()
    }

    #[test]
    fn circle_curvature() {
        let k = three_point_curvature((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
        assert_eq!(three_point_curvature((0.0, 0.0), (1.0, 1.0), (2.0, 2.0)), Some(0.0));
        assert_eq!(three_point_curvature((0.0, 0.0), (0.0, 0.0), (2.0, 2.0)), None);
    }

    #[test]
    fn quarter_circle_tie_goes_to_smallest_alpha() {
        // traversed from (0, 1) to (1, 0) clockwise around (1, 1): the L-corner orientation
        let n = 9;
        let xy: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 * i as f64 / (n - 1) as f64;
                (1.0 - t.cos(), 1.0 - t.sin())
            })
            .collect();
        let c = curve_from(&xy);
        let sel = max_curvature_alpha(&c, Scale::Linear).unwrap();
        for k in sel.curvature.iter().flatten() {
            assert!((k - 1.0).abs() < 1e-9);
        }
        assert_eq!(sel.index, 1);
        assert_eq!(sel.alpha, 2.0);
    }

    #[test]
    fn corner_is_found() {
        let xy = [(1.0, 100.0), (1.1, 30.0), (1.2, 2.0), (5.0, 1.5), (30.0, 1.0), (100.0, 0.9)];
        let sel = max_curvature_alpha(&curve_from(&xy), Scale::LogLog).unwrap();
        assert_eq!(sel.index, 2);
    }

    #[test]
    fn collinear_and_short_curves_fail() {
        let line: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 10.0 - i as f64)).collect();
        assert!(matches!(max_curvature_alpha(&curve_from(&line), Scale::Linear), Err(Error::NoCurvature(_))));
        let short = curve_from(&[(1.0, 2.0), (2.0, 1.0)]);
        assert!(matches!(max_curvature_alpha(&short, Scale::Linear), Err(Error::NoCurvature(_))));
    }

    #[test]
    fn points_are_sorted_and_checked() {
        let mk = |alpha, r| CurvePoint { alpha, residual_sq: r, penalty: 1.0, objective: r, nonzeros: 0 };
        let c = RegCurve::new(1.0, vec![mk(3.0, 1.0), mk(1.0, 2.0), mk(2.0, 0.5)]).unwrap();
        assert_eq!(c.alphas(), vec![1.0, 2.0, 3.0]);
        assert_eq!(c.warnings.len(), 1);
        assert!(RegCurve::new(1.0, vec![mk(1.0, 1.0), mk(1.0, 2.0)]).is_err());
        assert!(RegCurve::new(1.0, vec![mk(0.0, 1.0)]).is_err());
    }

    #[test]
    fn loglog_skips_nonpositive_points() {
        let xy = [(0.0, 100.0), (1.0, 100.0), (1.1, 30.0), (1.2, 2.0), (5.0, 1.5), (30.0, 0.0), (100.0, 0.9)];
        let k = curvature(&curve_from(&xy), Scale::LogLog);
        assert_eq!(k[0], None);
        assert_eq!(k[5], None);
        assert!(k[3].unwrap() > 0.0);
    }
}
