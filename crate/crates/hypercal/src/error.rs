use gbcal_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HypercalError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid prior: {0}")]
    Prior(String),
    #[error("no lattice point could be evaluated")]
    AllMissing,
    #[error("posterior has mass at {axis} = 0 so E[1/{axis}] diverges")]
    BoundaryMass { axis: &'static str },
    #[error("estimator failed: {0}")]
    Estimator(String),
    #[error("nested MCMC: {0}")]
    Nested(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HypercalError>;
