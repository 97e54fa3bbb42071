use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Core(#[from] gbcal_core::CoreError),
    #[error(transparent)]
    Oracle(#[from] gbcal_oracle::OracleError),
    #[error(transparent)]
    Loss(#[from] gbcal_losses::LossError),
    #[error(transparent)]
    Sampler(#[from] gbcal_sampler::SamplerError),
    #[error(transparent)]
    Hypercal(#[from] gbcal_hypercal::HypercalError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;
