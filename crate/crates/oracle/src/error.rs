use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("improper posterior: {0}")]
    Improper(String),
    #[error("invalid statistics: {0}")]
    InvalidStats(String),
    #[error("hessian not positive definite (eigenvalues {eigenvalues:?})")]
    NotPositiveDefinite { eigenvalues: Vec<f64> },
    #[error("mode search did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;
