use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("q = {q} outside the admissible range [{lo}, {hi}]")]
    QOutOfRange { q: f64, lo: f64, hi: f64 },

    #[error("rule `{rule}` needs q >= 1/rho = {min}, got q = {q}")]
    HypothesisViolated { rule: String, q: f64, min: f64 },

    #[error("unknown shrinkage rule `{0}`")]
    UnknownRule(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a frame: lower frame bound {0:e} is not positive")]
    NotAFrame(f64),

    #[error("not a bi-frame: |F G^T - I| reaches {0:e}")]
    NotBiFrame(f64),

    #[error("pseudo-inverse check L L# L = L failed with deviation {0:e}")]
    PseudoInverse(f64),

    #[error("data is not in the range of the operator: |L L# h - h| / |h| = {0:e}")]
    OutOfRange(f64),

    #[error("iteration diverged at step {iteration}")]
    Diverged { iteration: usize },

    #[error("no curvature maximum: {0}")]
    NoCurvature(String),

    #[error("at alpha = {alpha:e}: {source}")]
    AtAlpha { alpha: f64, source: Box<Error> },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors raised by an iterative solver blowing up.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Diverged { .. } => true,
            Error::AtAlpha { source, .. } => source.is_divergence(),
            _ => false,
        }
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::AtAlpha { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub(crate) fn check_q(q: f64, lo: f64, hi: f64) -> Result<()> {
    if q.is_finite() && q >= lo && q <= hi {
        Ok(())
    } else {
        Err(Error::QOutOfRange { q, lo, hi })
    }
}
