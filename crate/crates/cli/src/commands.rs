use std::path::{Path, PathBuf};

use lqshrink::benchmark::{self, CompareConfig, LogGrid};
use lqshrink::frames::{BiFrame, ForwardProblem, Frame};
use lqshrink::fredholm::{linspace, make_sparse_truth, FredholmProblem, KernelKind, BENCHMARK_SPIKES};
use lqshrink::io::{encode_matrix, fmt_f64, read_matrix, read_vector, to_json_string};
use lqshrink::modelsel::{max_curvature_alpha, q_sweep, sweep_alpha, RegCurve, SweepMethod};
use lqshrink::prox::{constant_factor_audit, log_grid_sample, log_uniform_sample};
use lqshrink::shrinkage::{rho_hs, ShrinkageRule};
use lqshrink::solver::{entropy, landweber_shrink, maxent_solve, LandweberConfig, MaxentConfig, StopReason};
use lqshrink::variational::{constant_factor_audit_jq, denoising, Objective, ProbeSet, RatioAudit, Variant, VariationalProblem, Weights};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::args::*;
use crate::{at_path, config_err, read_text, CliResult, Output};

/// `hs` alone is the hard/soft rule at the run's `q`.
fn parse_rule(name: &str, q: f64) -> CliResult<ShrinkageRule> {
    Ok(if name == "hs" { rho_hs(q)? } else { name.parse()? })
}

fn load_problem(input: &Option<PathBuf>, n: usize, seed: u64) -> CliResult<FredholmProblem> {
    match input {
        Some(path) => at_path(path, FredholmProblem::from_json(&read_text(path)?)),
        None => Ok(FredholmProblem::benchmark(n, seed)?),
    }
}

fn load_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    at_path(path, read_matrix(path))
}

fn load_vector(path: &Path) -> CliResult<DVector<f64>> {
    at_path(path, read_vector(path))
}

fn json<T: Serialize>(value: &T) -> String {
    to_json_string(value).expect("records serialize")
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// The main artifact goes to `path` with `summary` on stdout, or to stdout alone.
fn emit(out: &mut Output, path: &Option<PathBuf>, artifact: String, summary: &str) {
    match path {
        Some(p) => {
            out.file(p, artifact);
            out.print(summary);
        }
        None => out.print(&artifact),
    }
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Serialize)]
struct SolveRecord {
    q: f64,
    alpha: f64,
    rule: String,
    nonneg: bool,
    stop: StopReason,
    iterations: usize,
    /// Factor `c` applied to the operator.
    scale: f64,
    residual_norm: f64,
    penalty: f64,
    objective: f64,
    nonzeros: usize,
    solution: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

pub fn solve(a: SolveArgs, out: &mut Output) -> CliResult<()> {
    let mut cfg = LandweberConfig::new(a.q, a.alpha)?;
    cfg.rule = parse_rule(&a.rule, a.q)?;
    cfg.nonneg = a.nonneg;
    cfg.max_iters = a.max_iters;
    cfg.rel_tol = a.tol;
    cfg.normalize_operator = !a.raw_step;
    cfg.record_every = a.record_every;
    cfg.snapshot_every = 0;
    cfg.validate()?;
    let p = load_problem(&a.input, a.n, a.seed)?;
    let (t, f) = (p.kernel_matrix()?, p.data()?);

    let tr = landweber_shrink(&t, &f, &cfg)?;
    let last = *tr.last();
    let record = SolveRecord {
        q: a.q,
        alpha: a.alpha,
        rule: cfg.rule.to_string(),
        nonneg: a.nonneg,
        stop: tr.stop,
        iterations: tr.iterations,
        scale: tr.scale,
        residual_norm: last.residual_norm,
        penalty: last.penalty,
        objective: last.objective,
        nonzeros: last.nonzeros,
        solution: to_vec(&tr.iterate),
        wall_time_s: out.wall_time(),
    };
    if let Some(path) = &a.trace {
        let rows = tr.records.iter().map(|r| {
            vec![r.iteration.to_string(), fmt_f64(r.residual_norm), fmt_f64(r.penalty), fmt_f64(r.objective), r.nonzeros.to_string()]
        });
        out.file(path, csv(&["iteration", "residual_norm", "penalty", "objective", "nonzeros"], rows));
    }
    let stop = if tr.stop == StopReason::Converged { "converged" } else { "max_iters" };
    let summary = format!(
        "{stop} after {} iterations: residual {} objective {} nonzeros {}\n",
        tr.iterations,
        fmt_f64(last.residual_norm),
        fmt_f64(last.objective),
        last.nonzeros
    );
    emit(out, &a.out, json(&record), &summary);
    Ok(())
}

#[derive(Serialize)]
struct MaxentRecord {
    beta: f64,
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    entropy: f64,
    objective: f64,
    nonzeros: usize,
    solution: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

pub fn maxent(a: MaxentArgs, out: &mut Output) -> CliResult<()> {
    let cfg = MaxentConfig { beta: a.beta, max_iters: a.max_iters, tol: a.tol, ..MaxentConfig::new(a.beta) };
    let p = load_problem(&a.input, a.n, a.seed)?;
    let s = maxent_solve(&p.kernel_matrix()?, &p.data()?, &cfg)?;
    let record = MaxentRecord {
        beta: a.beta,
        converged: s.converged,
        iterations: s.iterations,
        residual_norm: s.residual_norm,
        entropy: entropy(&s.g),
        objective: s.objective,
        nonzeros: s.nonzeros(),
        solution: to_vec(&s.g),
        wall_time_s: out.wall_time(),
    };
    let summary = format!(
        "{} after {} iterations: residual {} nonzeros {}\n",
        if s.converged { "converged" } else { "not converged" },
        s.iterations,
        fmt_f64(s.residual_norm),
        record.nonzeros
    );
    emit(out, &a.out, json(&record), &summary);
    Ok(())
}

#[derive(Serialize)]
struct VarminRecord {
    q: f64,
    rule: String,
    variant: VariantArg,
    objective: Objective,
    audit: RatioAudit,
    g: Vec<f64>,
    coefficients: Vec<f64>,
}

pub fn varmin(a: VarminArgs, out: &mut Output) -> CliResult<()> {
    let rule = parse_rule(&a.rule, a.q)?;
    let data = a.data.as_ref().ok_or_else(|| config_err("varmin needs --data"))?;
    let h = load_vector(data)?;
    let forward = match &a.op {
        Some(p) => ForwardProblem::new(load_matrix(p)?, h)?,
        None => denoising(h)?,
    };
    let d = forward.domain_dim();
    let biframe = match (&a.frame, &a.dual) {
        (None, None) => BiFrame::orthonormal(d),
        (None, Some(_)) => return Err(config_err("--dual needs --frame")),
        (Some(f), None) => BiFrame::canonical(Frame::new(load_matrix(f)?)?)?,
        (Some(f), Some(g)) => BiFrame::new(Frame::new(load_matrix(f)?)?, Frame::new(load_matrix(g)?)?)?,
    };
    let weights = match &a.weights {
        Some(p) => {
            let v = load_vector(p)?;
            Weights::new(to_vec(&v), v.min(), v.max())?
        }
        None => Weights::uniform(biframe.len(), a.alpha)?,
    };
    let problem = VariationalProblem::new(forward, biframe, weights, a.q)?;
    let variant = match a.variant {
        VariantArg::PulledBack => Variant::PulledBack,
        VariantArg::Direct => Variant::Direct,
    };
    let m = problem.shrinkage_minimizer(&rule, variant)?;
    let probes = ProbeSet { gaussian: a.gaussian_probes, sparse: a.sparse_probes, support: a.probe_support, seed: a.seed };
    let record = VarminRecord {
        q: a.q,
        rule: rule.to_string(),
        variant: a.variant,
        objective: problem.eval_jq(&m.g)?,
        audit: constant_factor_audit_jq(&problem, &rule, variant, &probes)?,
        g: to_vec(&m.g),
        coefficients: to_vec(&m.coefficients),
    };
    let summary = format!(
        "objective {} (residual {} + penalty {}), audited ratio {}\n",
        fmt_f64(record.objective.total),
        fmt_f64(record.objective.residual_sq),
        fmt_f64(record.objective.penalty),
        fmt_f64(record.audit.max_ratio)
    );
    emit(out, &a.out, json(&record), &summary);
    Ok(())
}

fn parse_grid(spec: &str, seed: u64) -> CliResult<Vec<(f64, f64)>> {
    let bad = || config_err(format!("bad grid `{spec}`: use random:N or log:VLO:VHI:NV:ALO:AHI:NA"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["random", n] => Ok(log_uniform_sample(n.parse().map_err(|_| bad())?, (1e-3, 1e3), (1e-2, 1e2), seed)),
        ["log", vlo, vhi, nv, alo, ahi, na] => {
            let r = |s: &str| s.parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite()).ok_or_else(bad);
            let c = |s: &str| s.parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(bad);
            Ok(log_grid_sample((r(vlo)?, r(vhi)?, c(nv)?), (r(alo)?, r(ahi)?, c(na)?)))
        }
        _ => Err(bad()),
    }
}

pub fn prox_audit(a: ProxAuditArgs, out: &mut Output) -> CliResult<()> {
    let rule = parse_rule(&a.rule, a.q)?;
    let sample = parse_grid(&a.grid, a.seed)?;
    let audit = constant_factor_audit(a.q, &rule, &sample)?;
    let rows = audit.rows.iter().map(|r| [r.v, r.alpha, r.shrink_obj, r.oracle_obj, r.ratio].map(fmt_f64).to_vec());
    let table = csv(&["v", "alpha", "shrink_obj", "oracle_obj", "ratio"], rows);
    let summary = format!(
        "{} points, rule {} at q = {}: max ratio {} min ratio {}\n",
        audit.rows.len(),
        rule,
        a.q,
        fmt_f64(audit.max_ratio),
        fmt_f64(audit.min_ratio)
    );
    emit(out, &a.out, table, &summary);
    Ok(())
}

fn landweber_template(q: f64, nonneg: bool, max_iters: usize, tol: f64) -> CliResult<LandweberConfig> {
    let mut t = LandweberConfig::new(q, 1.0)?;
    t.nonneg = nonneg;
    t.max_iters = max_iters;
    t.rel_tol = tol;
    t.record_every = 1000;
    t.snapshot_every = 0;
    t.validate()?;
    Ok(t)
}

/// Closed-form sweeps use the operator itself with the standard basis.
fn closed_form_problem(t: &DMatrix<f64>, f: &DVector<f64>, q: f64) -> CliResult<VariationalProblem> {
    let n = t.ncols();
    Ok(VariationalProblem::new(ForwardProblem::new(t.clone(), f.clone())?, BiFrame::orthonormal(n), Weights::uniform(n, 1.0)?, q)?)
}

pub fn lcurve(a: LcurveArgs, out: &mut Output) -> CliResult<()> {
    let rule = parse_rule(&a.rule, a.q)?;
    let alphas = LogGrid { lo: a.alpha_min, hi: a.alpha_max, n: a.alpha_count }.values()?;
    if a.nonneg && a.method != Method::Landweber {
        return Err(config_err("--nonneg applies to the landweber method only"));
    }
    let template = landweber_template(a.q, a.nonneg, a.max_iters, a.tol)?;
    let p = load_problem(&a.input, a.n, a.seed)?;
    let (t, f) = (p.kernel_matrix()?, p.data()?);
    let closed = match a.method {
        Method::ClosedForm => Some(closed_form_problem(&t, &f, a.q)?),
        _ => None,
    };
    let method = match (a.method, &closed) {
        (Method::Landweber, _) => SweepMethod::Landweber { op: &t, data: &f, template },
        (Method::Maxent, _) => SweepMethod::Maxent { op: &t, data: &f, template: MaxentConfig::new(1.0) },
        (Method::ClosedForm, Some(problem)) => SweepMethod::ClosedForm { problem, variant: Variant::PulledBack },
        (Method::ClosedForm, None) => unreachable!("built above"),
    };
    let curve: RegCurve = sweep_alpha(&method, a.q, &rule, &alphas)?;
    for w in &curve.warnings {
        eprintln!("lqshrink: warning: {w}");
    }
    let sel = max_curvature_alpha(&curve, a.scale)?;
    let rows = curve.points.iter().zip(&sel.curvature).enumerate().map(|(i, (pt, k))| {
        vec![
            fmt_f64(pt.alpha),
            fmt_f64(pt.residual_sq),
            fmt_f64(pt.penalty),
            fmt_f64(pt.objective),
            pt.nonzeros.to_string(),
            fmt_f64(k.unwrap_or(f64::NAN)),
            u8::from(i == sel.index).to_string(),
        ]
    });
    let table = csv(&["alpha", "residual_sq", "penalty", "objective", "nonzeros", "curvature", "chosen"], rows);
    let chosen = curve.points[sel.index];
    let summary = format!(
        "chosen alpha {} (point {} of {}): residual_sq {} nonzeros {}\n",
        fmt_f64(sel.alpha),
        sel.index,
        curve.points.len(),
        fmt_f64(chosen.residual_sq),
        chosen.nonzeros
    );
    emit(out, &a.out, table, &summary);
    Ok(())
}

pub fn qsweep(a: QsweepArgs, out: &mut Output) -> CliResult<()> {
    let qs = a
        .q_grid
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| config_err(format!("bad q value `{s}` in --q-grid"))))
        .collect::<CliResult<Vec<f64>>>()?;
    if let Some(q) = qs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(config_err(format!("q = {q} outside [0, 1]")));
    }
    let alphas = LogGrid { lo: a.alpha_min, hi: a.alpha_max, n: a.alpha_count }.values()?;
    match a.method {
        Method::Maxent => return Err(config_err("qsweep needs the landweber or closed-form method")),
        Method::ClosedForm if a.nonneg => return Err(config_err("--nonneg applies to the landweber method only")),
        _ => {}
    }
    let template = landweber_template(1.0, a.nonneg, a.max_iters, a.tol)?;
    let p = load_problem(&a.input, a.n, a.seed)?;
    let (t, f) = (p.kernel_matrix()?, p.data()?);
    let closed = match a.method {
        Method::ClosedForm => Some(closed_form_problem(&t, &f, 1.0)?),
        _ => None,
    };
    let method = match &closed {
        Some(problem) => SweepMethod::ClosedForm { problem, variant: Variant::PulledBack },
        None => SweepMethod::Landweber { op: &t, data: &f, template },
    };
    let rows = q_sweep(&method, &qs, &alphas, a.scale)?;
    let lines = rows.iter().map(|r| vec![fmt_f64(r.q), fmt_f64(r.alpha), fmt_f64(r.residual_sq), r.nonzeros.to_string()]);
    let table = csv(&["q", "alpha", "residual_sq", "nonzeros"], lines);
    emit(out, &a.out, table, &format!("{} values of q swept\n", rows.len()));
    Ok(())
}

fn parse_spikes(spec: &str) -> CliResult<Vec<(usize, f64)>> {
    spec.split(',')
        .map(|item| {
            let bad = || config_err(format!("bad spike `{item}`: use index:amplitude"));
            let (i, a) = item.trim().split_once(':').ok_or_else(bad)?;
            Ok((i.parse().map_err(|_| bad())?, a.parse().map_err(|_| bad())?))
        })
        .collect()
}

pub fn gen_problem(a: GenProblemArgs, out: &mut Output) -> CliResult<()> {
    let x = linspace(0.0, 1.0, a.n);
    let kernel = match a.kernel {
        KernelArg::Sigmoid => KernelKind::SigmoidFront { t: a.t, w: a.w },
        KernelArg::Gaussian => KernelKind::GaussianBlur { s: a.s },
    };
    let spikes = match &a.spikes {
        Some(s) => parse_spikes(s)?,
        None => BENCHMARK_SPIKES.iter().map(|&i| (i * a.n / 100, 1.0)).collect(),
    };
    let truth = make_sparse_truth(a.n, &spikes)?;
    let mut p = FredholmProblem::synthetic(kernel, x.clone(), x, truth, 0.0, a.seed)?;
    p.noise_sigma = match a.sigma {
        Some(s) => s,
        None => a.noise * p.clean_data()?.amax(),
    };
    p.validate()?;
    if a.materialize {
        p.data = Some(to_vec(&p.observe()?));
    }
    if let Some(path) = &a.matrix {
        out.file(path, encode_matrix(path, &p.kernel_matrix()?)?);
    }
    let summary = format!("n = {}, noise sigma {}, snr {}\n", a.n, fmt_f64(p.noise_sigma), fmt_f64(p.snr()?));
    emit(out, &a.out, p.to_json()?, &summary);
    Ok(())
}

pub fn compare(a: CompareArgs, out: &mut Output) -> CliResult<()> {
    let cfg = CompareConfig {
        q: a.q,
        beta_grid: LogGrid { lo: a.beta_min, hi: a.beta_max, n: a.beta_count },
        alpha_grid: LogGrid { lo: a.alpha_min, hi: a.alpha_max, n: a.alpha_count },
        max_iters: a.max_iters,
        rel_tol: a.tol,
        scale: a.scale,
    };
    let p = load_problem(&a.input, a.n, a.seed)?;
    let report = benchmark::compare(&p, &cfg)?;
    if let Some(path) = &a.out {
        out.file(path, json(&report));
    }
    if let Some(path) = &a.csv {
        let rows = [&report.maxent, &report.landweber, &report.matched].map(|m| {
            let peaks: Vec<String> = m.peaks.iter().map(usize::to_string).collect();
            vec![m.method.clone(), fmt_f64(m.parameter), fmt_f64(m.residual_norm), m.nonzeros.to_string(), peaks.join(";")]
        });
        out.file(path, csv(&["method", "parameter", "residual_norm", "nonzeros", "peaks"], rows));
    }
    out.print(&report.table());
    Ok(())
}
