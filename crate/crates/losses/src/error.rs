use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("invalid loss specification: {0}")]
    Spec(String),
    #[error("power integral diverges or cannot be evaluated at beta = {beta}: {reason}")]
    Divergent { beta: f64, reason: String },
    #[error("parameter outside the model domain: {0}")]
    Domain(String),
    #[error("marginalisation failed at phi = {phi:?}: {source}")]
    Marginal {
        phi: Vec<f64>,
        #[source]
        source: gbcal_oracle::OracleError,
    },
    #[error(transparent)]
    Core(#[from] gbcal_core::CoreError),
}

pub type Result<T> = std::result::Result<T, LossError>;
