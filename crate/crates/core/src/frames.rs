//! Finite frames, bi-frames, pseudo-inverses and the forward problem `h = L g`.
//!
//! A frame is stored by its synthesis matrix `F` (columns are the frame
//! vectors). Analysis is `F^T`. A bi-frame `(F, F̃)` satisfies `F F̃^T = I`, so
//! `g = F (F̃^T g)` for every `g`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::par;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_RTOL: f64 = 1e-12;
pub const BIFRAME_TOL: f64 = 1e-10;
pub const PINV_TOL: f64 = 1e-8;

/// Matrix-free linear map with an adjoint.
pub trait LinearOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A x`
    fn apply(&self, x: &DVector<f64>, out: &mut DVector<f64>);
    /// `out = A^T y`
    fn apply_adjoint(&self, y: &DVector<f64>, out: &mut DVector<f64>);
    /// The explicit matrix, when there is one.
    fn dense(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

impl LinearOperator for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, self, x, 0.0);
    }

    fn apply_adjoint(&self, y: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv_tr(1.0, self, y, 0.0);
    }

    fn dense(&self) -> Option<&DMatrix<f64>> {
        Some(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    synthesis: DMatrix<f64>,
}

impl Frame {
    pub fn new(synthesis: DMatrix<f64>) -> Result<Self> {
        if synthesis.nrows() == 0 || synthesis.ncols() == 0 {
            return Err(Error::Dimension("frame synthesis matrix is empty".into()));
        }
        if synthesis.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("synthesis", "entries must be finite"));
        }
        Ok(Frame { synthesis })
    }

    /// The standard basis of `R^n`.
    pub fn orthonormal(n: usize) -> Self {
        Frame { synthesis: DMatrix::identity(n, n) }
    }

    pub fn synthesis_matrix(&self) -> &DMatrix<f64> {
        &self.synthesis
    }

    /// Dimension of the space `H`.
    pub fn dim(&self) -> usize {
        self.synthesis.nrows()
    }

    /// Number of frame vectors.
    pub fn len(&self) -> usize {
        self.synthesis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ c_n f_n`
    pub fn synthesize(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.synthesis * c
    }

    /// `(⟨g, f_n⟩)_n`
    pub fn analyze(&self, g: &DVector<f64>) -> DVector<f64> {
        self.synthesis.tr_mul(g)
    }

    /// `S = F F^T`
    pub fn frame_operator(&self) -> DMatrix<f64> {
        &self.synthesis * self.synthesis.transpose()
    }

    /// Extreme eigenvalues of the frame operator.
    pub fn bounds(&self) -> Result<FrameBounds> {
        let eig = self.frame_operator().symmetric_eigen();
        let upper = eig.eigenvalues.max();
        let lower = eig.eigenvalues.min();
        if !(upper > 0.0) || lower <= RANK_RTOL * upper {
            return Err(Error::NotAFrame(lower));
        }
        Ok(FrameBounds { lower, upper })
    }

    /// `{S^{-1} f_n}`
    pub fn canonical_dual(&self) -> Result<Frame> {
        self.bounds()?;
        let chol = self.frame_operator().cholesky().ok_or(Error::NotAFrame(0.0))?;
        Ok(Frame { synthesis: chol.solve(&self.synthesis) })
    }
}

/// Three unit vectors at 120° in `R^2`; tight with bound 3/2.
pub fn mercedes_benz() -> Frame {
    let s = 3f64.sqrt() / 2.0;
    Frame { synthesis: DMatrix::from_row_slice(2, 3, &[0.0, -s, s, 1.0, -0.5, -0.5]) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiFrame {
    primal: Frame,
    dual: Frame,
}

impl BiFrame {
    /// Checks `F F̃^T = I` entrywise to [`BIFRAME_TOL`].
    pub fn new(primal: Frame, dual: Frame) -> Result<Self> {
        if primal.dim() != dual.dim() || primal.len() != dual.len() {
            return Err(Error::Dimension(format!(
                "primal is {}x{}, dual is {}x{}",
                primal.dim(),
                primal.len(),
                dual.dim(),
                dual.len()
            )));
        }
        let dev = identity_deviation(&(primal.synthesis_matrix() * dual.synthesis_matrix().transpose()));
        if !(dev <= BIFRAME_TOL) {
            return Err(Error::NotBiFrame(dev));
        }
        Ok(BiFrame { primal, dual })
    }

    pub fn canonical(primal: Frame) -> Result<Self> {
        let dual = primal.canonical_dual()?;
        Self::new(primal, dual)
    }

    pub fn orthonormal(n: usize) -> Self {
        BiFrame { primal: Frame::orthonormal(n), dual: Frame::orthonormal(n) }
    }

    pub fn primal(&self) -> &Frame {
        &self.primal
    }

    pub fn dual(&self) -> &Frame {
        &self.dual
    }

    pub fn dim(&self) -> usize {
        self.primal.dim()
    }

    pub fn len(&self) -> usize {
        self.primal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primal.is_empty()
    }

    /// Coefficients `F̃^T g`.
    pub fn analyze(&self, g: &DVector<f64>) -> DVector<f64> {
        self.dual.analyze(g)
    }

    /// `F c`
    pub fn synthesize(&self, c: &DVector<f64>) -> DVector<f64> {
        self.primal.synthesize(c)
    }

    /// The sequence-space operator `F̃^T F`.
    pub fn coefficient_projector(&self) -> DMatrix<f64> {
        self.dual.synthesis_matrix().tr_mul(self.primal.synthesis_matrix())
    }
}

/// Largest entry of `|M − I|`.
pub fn identity_deviation(m: &DMatrix<f64>) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((m[(i, j)] - target).abs());
        }
    }
    dev
}

/// Moore–Penrose inverse via SVD; singular values below `1e−12·σ_max` are dropped.
pub fn pseudo_inverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if l.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("operator", "entries must be finite"));
    }
    let (m, n) = l.shape();
    if m == 0 || n == 0 {
        return Err(Error::Dimension("operator is empty".into()));
    }
    let svd = l.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Err(Error::invalid("operator", "must be nonzero"));
    }
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let cut = RANK_RTOL * smax;
    let mut out = DMatrix::zeros(n, m);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            // out += v_k u_k^T / s
            out.ger(1.0 / s, &vt.row(k).transpose(), &u.column(k), 1.0);
        }
    }
    Ok(out)
}

/// `max|L L# L − L|`, scaled by `max(1, max|L|)`.
pub fn pseudo_inverse_defect(l: &DMatrix<f64>, pinv: &DMatrix<f64>) -> f64 {
    let scale = l.amax().max(1.0);
    (l * pinv * l - l).amax() / scale
}

/// `min ‖h − L g‖` data `h` together with `L` and its pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardProblem {
    op: DMatrix<f64>,
    pinv: DMatrix<f64>,
    data: DVector<f64>,
}

impl ForwardProblem {
    pub fn new(op: DMatrix<f64>, data: DVector<f64>) -> Result<Self> {
        if op.nrows() != data.len() {
            return Err(Error::Dimension(format!("operator has {} rows, data has {} entries", op.nrows(), data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("data", "entries must be finite"));
        }
        let pinv = pseudo_inverse(&op)?;
        let defect = pseudo_inverse_defect(&op, &pinv);
        if !(defect <= PINV_TOL) {
            return Err(Error::PseudoInverse(defect));
        }
        Ok(ForwardProblem { op, pinv, data })
    }

    pub fn op(&self) -> &DMatrix<f64> {
        &self.op
    }

    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    /// Dimension of the solution space.
    pub fn domain_dim(&self) -> usize {
        self.op.ncols()
    }

    /// `‖L L# h − h‖ / ‖h‖`, or `0` for `h = 0`.
    pub fn range_residual(&self) -> f64 {
        let hn = self.data.norm();
        if hn == 0.0 {
            return 0.0;
        }
        (&self.op * (&self.pinv * &self.data) - &self.data).norm() / hn
    }
}

/// `(Σ α_n |x_n|^q)^{1/q}`.
pub fn weighted_quasi_norm(x: &DVector<f64>, weights: &[f64], q: f64) -> f64 {
    let s: f64 = x.iter().zip(weights).map(|(&v, &a)| if v == 0.0 { 0.0 } else { a * v.abs().powf(q) }).sum();
    s.powf(1.0 / q)
}

/// Empirical `ℓ_q^{(α)} → ℓ_q^{(α)}` operator (quasi-)norm.
///
/// Probes are the standard basis vectors plus `n_random` Gaussian vectors from
/// `seed`; the result is the largest observed ratio, hence a lower estimate.
pub fn boundedness_audit(op: &DMatrix<f64>, q: f64, weights: &[f64], n_random: usize, seed: u64) -> Result<f64> {
    if op.nrows() != op.ncols() {
        return Err(Error::Dimension(format!("sequence-space operator must be square, got {}x{}", op.nrows(), op.ncols())));
    }
    if weights.len() != op.ncols() {
        return Err(Error::Dimension(format!("{} weights for {} coefficients", weights.len(), op.ncols())));
    }
    if !(q > 0.0 && q <= 2.0) {
        return Err(Error::QOutOfRange { q, lo: f64::MIN_POSITIVE, hi: 2.0 });
    }
    let n = op.ncols();
    let mut probes: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probes.extend((0..n_random).map(|_| DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))));
    let ratios = par::map(&probes, |x| {
        let d = weighted_quasi_norm(x, weights, q);
        if d == 0.0 {
            0.0
        } else {
            weighted_quasi_norm(&(op * x), weights, q) / d
        }
    });
    Ok(ratios.into_iter().fold(0.0, f64::max))
}
