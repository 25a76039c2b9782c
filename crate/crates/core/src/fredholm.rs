//! Discretized first-kind Fredholm problems `f(y) = ∫ g(x) K(x, y) dx`.
//!
//! The kernel matrix is `A[i][j] = w_j · K(x_j, y_i)` with trapezoidal weights
//! `w_j` on the solution grid, so `A g` approximates the integral for a density
//! `g` sampled at `x_j`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analytic surrogate kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(−(x − y)² / (2 s²))`
    GaussianBlur { s: f64 },
    /// `1 / (1 + exp(−(y − x·t) / w))`: a front moving with speed `x`, observed at time `t`.
    SigmoidFront { t: f64, w: f64 },
}

impl KernelKind {
    fn validate(&self) -> Result<()> {
        match *self {
            KernelKind::GaussianBlur { s } if !(s > 0.0 && s.is_finite()) => {
                Err(Error::invalid("s", format!("kernel scale must be positive, got {s}")))
            }
            KernelKind::SigmoidFront { w, .. } if !(w > 0.0 && w.is_finite()) => {
                Err(Error::invalid("w", format!("front width must be positive, got {w}")))
            }
            KernelKind::SigmoidFront { t, .. } if !t.is_finite() => Err(Error::invalid("t", "must be finite")),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            KernelKind::GaussianBlur { s } => (-(x - y).powi(2) / (2.0 * s * s)).exp(),
            KernelKind::SigmoidFront { t, w } => 1.0 / (1.0 + (-(y - x * t) / w).exp()),
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn check_grid(name: &'static str, g: &[f64]) -> Result<()> {
    if g.len() < 2 {
        return Err(Error::invalid(name, "needs at least two points"));
    }
    if g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(name, "must be finite and strictly increasing"));
    }
    Ok(())
}

/// Composite trapezoidal weights on a (possibly nonuniform) grid.
pub fn trapezoid_weights(x: &[f64]) -> Result<Vec<f64>> {
    check_grid("x_grid", x)?;
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    Ok(w)
}

/// `P × M` matrix of quadrature-weighted kernel samples.
pub fn make_synthetic_kernel(kind: &KernelKind, x_grid: &[f64], y_grid: &[f64]) -> Result<DMatrix<f64>> {
    kind.validate()?;
    check_grid("y_grid", y_grid)?;
    let w = trapezoid_weights(x_grid)?;
    Ok(DMatrix::from_fn(y_grid.len(), x_grid.len(), |i, j| w[j] * kind.eval(x_grid[j], y_grid[i])))
}

/// Length-`m` vector with the given `(index, amplitude)` spikes.
pub fn make_sparse_truth(m: usize, spikes: &[(usize, f64)]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; m];
    for &(i, a) in spikes {
        if i >= m {
            return Err(Error::invalid("spikes", format!("position {i} outside 0..{m}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("spikes", format!("amplitude {a} at {i} must be positive")));
        }
        if g[i] != 0.0 {
            return Err(Error::invalid("spikes", format!("duplicate position {i}")));
        }
        g[i] = a;
    }
    Ok(g)
}

pub const BENCHMARK_SPIKES: [usize; 4] = [45, 55, 66, 89];
pub const BENCHMARK_SEED: u64 = 42;
/// Front width of the benchmark kernel, two grid cells at `M = 100`.
pub const BENCHMARK_FRONT_WIDTH: f64 = 0.02;
/// `σ` as a fraction of `max|K g*|`.
pub const DEFAULT_RELATIVE_NOISE: f64 = 1e-2;

/// A self-contained, serializable test problem.
///
/// Exactly one of `kernel` and `kernel_matrix` is set. If `data` is present it
/// is used verbatim; otherwise data are synthesized from `ground_truth`,
/// `noise_sigma` and `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmProblem {
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelKind>,
    /// Row-major `P × M`, already quadrature-weighted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_matrix: Option<Vec<Vec<f64>>>,
    /// How `kernel` is turned into a matrix; only `"trapezoid"` is defined.
    pub quadrature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<f64>>,
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<f64>>,
}

impl FredholmProblem {
    pub fn synthetic(
        kernel: KernelKind,
        x_grid: Vec<f64>,
        y_grid: Vec<f64>,
        ground_truth: Vec<f64>,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let p = FredholmProblem {
            x_grid,
            y_grid,
            kernel: Some(kernel),
            kernel_matrix: None,
            quadrature: "trapezoid".into(),
            ground_truth: Some(ground_truth),
            noise_sigma,
            seed,
            data: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Sigmoid-front benchmark on `linspace(0, 1, n)` with unit spikes at
    /// [`BENCHMARK_SPIKES`] scaled to `n`, `σ = 1e−2·max|K g*|`.
    pub fn benchmark(n: usize, seed: u64) -> Result<Self> {
        let x = linspace(0.0, 1.0, n);
        let kernel = KernelKind::SigmoidFront { t: 1.0, w: BENCHMARK_FRONT_WIDTH };
        let spikes: Vec<(usize, f64)> = BENCHMARK_SPIKES.iter().map(|&i| (i * n / 100, 1.0)).collect();
        let truth = make_sparse_truth(n, &spikes)?;
        let mut p = Self::synthetic(kernel, x.clone(), x, truth, 0.0, seed)?;
        p.noise_sigma = DEFAULT_RELATIVE_NOISE * p.clean_data()?.amax();
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("x_grid", &self.x_grid)?;
        check_grid("y_grid", &self.y_grid)?;
        let (m, p) = (self.x_grid.len(), self.y_grid.len());
        match (&self.kernel, &self.kernel_matrix) {
            (Some(k), None) => {
                k.validate()?;
                if self.quadrature != "trapezoid" {
                    return Err(Error::invalid("quadrature", format!("unsupported rule `{}`", self.quadrature)));
                }
            }
            (None, Some(rows)) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != m) {
                    return Err(Error::Dimension(format!("kernel_matrix must be {p}x{m}")));
                }
                if rows.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("kernel_matrix", "entries must be finite"));
                }
            }
            _ => return Err(Error::invalid("kernel", "set exactly one of `kernel` and `kernel_matrix`")),
        }
        if let Some(g) = &self.ground_truth {
            if g.len() != m || g.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::invalid("ground_truth", format!("must be {m} finite nonnegative values")));
            }
        }
        if let Some(d) = &self.data {
            if d.len() != p || d.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("data", format!("must be {p} finite values")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma", "must be finite and nonnegative"));
        }
        if self.ground_truth.is_none() && self.data.is_none() {
            return Err(Error::invalid("data", "need either data or a ground truth to synthesize it"));
        }
        Ok(())
    }

    pub fn kernel_matrix(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let a = match (&self.kernel, &self.kernel_matrix) {
            (Some(k), _) => make_synthetic_kernel(k, &self.x_grid, &self.y_grid)?,
            (None, Some(rows)) => DMatrix::from_fn(rows.len(), self.x_grid.len(), |i, j| rows[i][j]),
            (None, None) => unreachable!("validated"),
        };
        if let Some(j) = (0..a.ncols()).find(|&j| a.column(j).norm() == 0.0) {
            return Err(Error::invalid("kernel", format!("column {j} is identically zero")));
        }
        Ok(a)
    }

    pub fn ground_truth(&self) -> Option<DVector<f64>> {
        self.ground_truth.as_ref().map(|g| DVector::from_column_slice(g))
    }

    /// `K g*`
    pub fn clean_data(&self) -> Result<DVector<f64>> {
        let g = self.ground_truth().ok_or_else(|| Error::invalid("ground_truth", "required to synthesize data"))?;
        Ok(self.kernel_matrix()? * g)
    }

    /// `K g* + σ ξ` with `ξ` standard normal from `seed`.
    pub fn observe(&self) -> Result<DVector<f64>> {
        let clean = self.clean_data()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(clean.map(|c| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c + self.noise_sigma * z
        }))
    }

    /// Stored data if present, otherwise [`observe`](Self::observe).
    pub fn data(&self) -> Result<DVector<f64>> {
        match &self.data {
            Some(d) => {
                self.validate()?;
                Ok(DVector::from_column_slice(d))
            }
            None => self.observe(),
        }
    }

    /// `‖K g*‖ / (σ √P)`; infinite without noise.
    pub fn snr(&self) -> Result<f64> {
        let clean = self.clean_data()?;
        Ok(clean.norm() / (self.noise_sigma * (self.y_grid.len() as f64).sqrt()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::io::to_json_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: FredholmProblem = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// 2-norm condition number `σ_max / σ_min`.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = a.singular_values();
    s.max() / s.min()
}
