use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid chain configuration: {0}")]
    Config(String),
    #[error("log target is NaN at iteration {iter}, state {state:?}")]
    NanTarget { iter: usize, state: Vec<f64> },
    #[error("log target is not finite at the initial state {0:?}")]
    BadInit(Vec<f64>),
    #[error(transparent)]
    Core(#[from] gbcal_core::CoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SamplerError>;
