use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("no home AS for vantage point `{0}`")]
    MissingVpHome(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("training corpus must contain both classes")]
    SingleClass,

    #[error("system has no labels or lexicon entries to anchor it")]
    Unanchored,

    #[error("tensor has a non-finite entry at ({0}, {1}, {2})")]
    NonFinite(usize, usize, usize),

    #[error("tensor is identically zero")]
    ZeroTensor,

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("conjugate gradient breakdown at iteration {iteration}: non-positive curvature {curvature:.3e}")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of an iterative numerical method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::Breakdown { .. })
    }
}
