//! Pooled versus one-at-a-time evaluation of the two embarrassingly parallel
//! workloads: an α sweep and a scalar audit.
//!
//! With the default `parallel` feature the pooled variants fan out over rayon;
//! `cargo bench --no-default-features` gives the sequential baseline for both.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lqshrink::fredholm::FredholmProblem;
use lqshrink::modelsel::{sweep_alpha, SweepMethod};
use lqshrink::prox::{audit_point, constant_factor_audit, log_uniform_sample};
use lqshrink::shrinkage::{logspace, rho_hs};
use lqshrink::solver::LandweberConfig;

fn alpha_sweep(c: &mut Criterion) {
    let p = FredholmProblem::benchmark(100, 42).unwrap();
    let (t, f) = (p.kernel_matrix().unwrap(), p.data().unwrap());
    let mut template = LandweberConfig::new(0.5, 1.0).unwrap();
    template.nonneg = true;
    template.max_iters = 2000;
    template.snapshot_every = 0;
    let method = SweepMethod::Landweber { op: &t, data: &f, template };
    let rule = rho_hs(0.5).unwrap();
    let alphas = logspace(1e-6, 1e-2, 8);

    let mut g = c.benchmark_group("alpha_sweep");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("pooled", lqshrink::par::is_parallel()), |b| {
        b.iter(|| sweep_alpha(&method, 0.5, &rule, &alphas).unwrap())
    });
    g.bench_function("one_at_a_time", |b| {
        b.iter(|| alphas.iter().map(|&a| sweep_alpha(&method, 0.5, &rule, &[a]).unwrap()).count())
    });
    g.finish();
}

fn scalar_audit(c: &mut Criterion) {
    let sample = log_uniform_sample(2000, (1e-3, 1e3), (1e-2, 1e2), 1);
    let rule = rho_hs(0.5).unwrap();

    let mut g = c.benchmark_group("scalar_audit");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("pooled", lqshrink::par::is_parallel()), |b| {
        b.iter(|| constant_factor_audit(0.5, &rule, &sample).unwrap().max_ratio)
    });
    g.bench_function("one_at_a_time", |b| {
        b.iter(|| sample.iter().map(|&(v, a)| audit_point(&rule, 0.5, v, a).unwrap().ratio).fold(0.0, f64::max))
    });
    g.finish();
}

criterion_group!(benches, alpha_sweep, scalar_audit);
criterion_main!(benches);
