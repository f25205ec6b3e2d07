use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("singular parametrization at x' = {at}")]
    SingularParametrization { at: f64 },
    #[error("mesh resolution error: h = {h} exceeds {limit} required to resolve the oscillation period")]
    Resolution { h: f64, limit: f64 },
    #[error("degenerate triangle {element} (signed area {area})")]
    DegenerateElement { element: usize, area: f64 },
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverNonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("operator is not positive definite (curvature {curvature:e} at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },
    #[error("nonlinear solve failed after {iterations} iterations (residual {residual:e})")]
    NonlinearNonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("weak-limit estimation failed: worst extrapolation residual {worst:e} exceeds {tolerance:e}")]
    Estimation {
        worst: f64,
        tolerance: f64,
        residuals: Vec<f64>,
    },
    #[error("closed form unavailable: {0}")]
    ClosedFormUnavailable(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
