use thiserror::Error;

/// Errors raised while building or applying the discretization and the
/// BDDC preconditioner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix of dimension {dim} is not numerically positive definite")]
    NotPositiveDefinite { dim: usize },

    #[error("assembly produced a non-Hermitian block (defect {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("singular interior block in subdomain {subdomain}")]
    SingularInterior { subdomain: usize },

    #[error("singular dual block in subdomain {subdomain}")]
    SingularDual { subdomain: usize },

    #[error("face {face}: {msg}")]
    Face { face: usize, msg: String },

    #[error("deluxe scaling on face {face} violates the partition of unity (residual {residual:.3e})")]
    Scaling { face: usize, residual: f64 },

    #[error("PCG stopped at the iteration cap ({iterations}) with relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("PCG breakdown at iteration {iteration}: non-positive curvature {curvature:.3e}")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("cannot agglomerate level {level}: {msg}")]
    Agglomeration { level: usize, msg: String },

    #[error("LAPACK failure: {0}")]
    Lapack(String),

    #[error("missing exact solution for error evaluation")]
    NoExactSolution,

    #[error("{stage}: {inner}")]
    Stage { stage: &'static str, inner: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Innermost error after unwrapping stage attributions.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { inner, .. } => inner.root(),
            other => other,
        }
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            inner: Box::new(e),
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
