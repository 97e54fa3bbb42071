use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for configuration errors, 3 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        })*
    };
}

runtime_from!(
    std::io::Error,
    csv::Error,
    serde_json::Error,
    gbcal_core::CoreError,
    gbcal_oracle::OracleError,
    gbcal_hypercal::HypercalError,
    gbcal_eval::EvalError
);

pub type Result<T> = std::result::Result<T, CliError>;
