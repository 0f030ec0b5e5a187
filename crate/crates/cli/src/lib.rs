//! Experiment runner behind the `adaprep` binary.

pub mod config;
pub mod experiments;
pub mod io;

pub use config::{build_config, parse_override, Experiment, ExperimentConfig, Format};
pub use experiments::run_experiment;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) | CliError::Format(_) => 1,
        }
    }
}

impl From<adaprep::Error> for CliError {
    fn from(e: adaprep::Error) -> Self {
        use adaprep::Error as E;
        match e {
            E::InvalidParameter(_) | E::ResourceLimit(_) | E::DimensionOverflow { .. } | E::UnknownLabel(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(e.to_string())
    }
}
