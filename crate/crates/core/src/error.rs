use thiserror::Error;

/// Errors produced by construction, assembly, and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid method: {0}")]
    InvalidMethod(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate polynomial: all coefficients are zero")]
    DegeneratePolynomial,

    #[error("sigma polynomial is identically zero; method has no stability-at-infinity content")]
    SigmaIdenticallyZero,

    #[error("matrix is defective or near-defective: eigenvector reconstruction residual {residual:.3e} exceeds {tolerance:.3e}")]
    DefectiveMatrix { residual: f64, tolerance: f64 },

    #[error("eigenvalue wedge hypothesis violated: max |arg(-lambda)| = {angle:.6} rad")]
    WedgeViolated { angle: f64 },

    #[error("matrix is numerically singular: sigma_min/sigma_max = {ratio:.3e}")]
    NumericallySingular { ratio: f64 },

    #[error("implicit update matrix is singular: {0}")]
    SingularImplicitStep(String),

    #[error("post-selection probability {p:.3e} is below 1e-12; constant-interval amplitudes vanish")]
    PostselectionImpossible { p: f64 },

    #[error("solution vector is zero; history state is undefined")]
    ZeroSolution,

    #[error("final-state norm is zero; error budget is undefined")]
    ZeroFinalNorm,

    #[error("linear algebra backend error: {0}")]
    Linalg(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
