use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lqshrink::modelsel::Scale;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "lqshrink", version, about = "Sparse lq-regularized inversion by q-dependent shrinkage")]
pub struct Cli {
    /// Flat JSON object of flag values; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Report wall time on stderr and in solution records.
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shrinked Landweber iteration on a Fredholm problem.
    Solve(SolveArgs),
    /// Maximum-entropy reconstruction on a Fredholm problem.
    Maxent(MaxentArgs),
    /// Closed-form shrinkage minimizer for an operator, a bi-frame and weights.
    Varmin(VarminArgs),
    /// Scalar shrinkage versus brute-force oracle on a (v, alpha) sample.
    ProxAudit(ProxAuditArgs),
    /// Regularization curve over an alpha grid and its curvature maximum.
    Lcurve(LcurveArgs),
    /// Curvature-selected alpha, residual and sparsity per q.
    Qsweep(QsweepArgs),
    /// Write a synthetic Fredholm problem file.
    GenProblem(GenProblemArgs),
    /// Sparse shrinkage against maximum entropy on one problem.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Landweber,
    Maxent,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    PulledBack,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelArg {
    Sigmoid,
    Gaussian,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub alpha: f64,
    /// Catalog name (`soft`, `ndeg:2`, `firm:1`, ...); `hs` means `hs:<q>`.
    #[arg(long, default_value = "hs")]
    pub rule: String,
    #[arg(long)]
    pub nonneg: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Stop when `|g_{k+1} − g_k| ≤ tol·max(|g_k|, 1)`.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Skip the rescaling of the operator to spectral norm 0.99.
    #[arg(long)]
    pub raw_step: bool,
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
    /// Problem file; the default is the sigmoid-front benchmark of size `n`.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Trace CSV: iteration, residual_norm, penalty, objective, nonzeros.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Solution JSON; printed to stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxentArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub beta: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Relative objective change that counts as converged.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarminArgs {
    /// Data vector `h` (`.csv` or `.bin`).
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Operator `L`; identity when absent.
    #[arg(long, value_name = "FILE")]
    pub op: Option<PathBuf>,
    /// Synthesis matrix of the frame, one element per column; standard basis when absent.
    #[arg(long, value_name = "FILE")]
    pub frame: Option<PathBuf>,
    /// Synthesis matrix of the dual frame; canonical dual when absent.
    #[arg(long, value_name = "FILE")]
    pub dual: Option<PathBuf>,
    /// Per-coefficient weights; uniform `alpha` when absent.
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value = "hs")]
    pub rule: String,
    #[arg(long, value_enum, default_value_t = VariantArg::PulledBack)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 64)]
    pub gaussian_probes: usize,
    #[arg(long, default_value_t = 64)]
    pub sparse_probes: usize,
    #[arg(long, default_value_t = 3)]
    pub probe_support: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxAuditArgs {
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value = "hs")]
    pub rule: String,
    /// `random:N` (log-uniform, |v| in [1e-3, 1e3], alpha in [1e-2, 1e2])
    /// or `log:VLO:VHI:NV:ALO:AHI:NA` (Cartesian log grid, v > 0).
    #[arg(long, default_value = "random:10000")]
    pub grid: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// CSV of v, alpha, shrink_obj, oracle_obj, ratio.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LcurveArgs {
    #[arg(long, value_enum, default_value_t = Method::Landweber)]
    pub method: Method,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value = "hs")]
    pub rule: String,
    #[arg(long, default_value_t = 1e-7)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 11)]
    pub alpha_count: usize,
    #[arg(long, default_value = "loglog")]
    pub scale: Scale,
    #[arg(long)]
    pub nonneg: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// CSV of alpha, residual_sq, penalty, objective, nonzeros, curvature, chosen.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsweepArgs {
    /// `landweber` or `closed-form`; maximum entropy has no q.
    #[arg(long, value_enum, default_value_t = Method::Landweber)]
    pub method: Method,
    /// Comma-separated q values in [0, 1].
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub q_grid: String,
    #[arg(long, default_value_t = 1e-7)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 11)]
    pub alpha_count: usize,
    #[arg(long, default_value = "loglog")]
    pub scale: Scale,
    #[arg(long)]
    pub nonneg: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// CSV of q, alpha, residual_sq, nonzeros.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenProblemArgs {
    /// Grid size on both axes, `linspace(0, 1, n)`.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = KernelArg::Sigmoid)]
    pub kernel: KernelArg,
    /// Observation time of the sigmoid front.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Sigmoid front width.
    #[arg(long, default_value_t = lqshrink::fredholm::BENCHMARK_FRONT_WIDTH)]
    pub w: f64,
    /// Gaussian blur width.
    #[arg(long, default_value_t = 0.03)]
    pub s: f64,
    /// `index:amplitude` pairs, comma-separated; default is the four benchmark spikes scaled to `n`.
    #[arg(long)]
    pub spikes: Option<String>,
    /// Noise level relative to `max|K g|`.
    #[arg(long, default_value_t = lqshrink::fredholm::DEFAULT_RELATIVE_NOISE)]
    pub noise: f64,
    /// Absolute noise level; overrides `noise`.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Store the noisy data in the file instead of regenerating it from the seed.
    #[arg(long)]
    pub materialize: bool,
    /// Also write the kernel matrix (`.csv` or `.bin`).
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Problem JSON; printed to stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 29)]
    pub beta_count: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 17)]
    pub alpha_count: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value = "loglog")]
    pub scale: Scale,
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Full report JSON.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Summary CSV: method, parameter, residual_norm, nonzeros, peaks.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}
