use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("parameter outside its domain: {0}")]
    ParameterDomain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
