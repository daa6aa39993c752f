use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("solvability error: integral of the source is {integral:.3e}, tolerance {tolerance:.3e}")]
    Solvability { integral: f64, tolerance: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("inconclusive spectrum: largest gap ratio {gap_ratio:.3} is below {required}")]
    Inconclusive {
        gap_ratio: f64,
        required: f64,
        spectrum: Vec<f64>,
    },
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("missing pairing for vertex {0}")]
    MissingPairing(usize),
}

pub type Result<T> = std::result::Result<T, CrError>;
