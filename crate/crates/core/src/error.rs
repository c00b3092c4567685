use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A link distance shorter than the UAV altitude.
    #[error("elevation domain: distance {distance} m is shorter than altitude {altitude} m")]
    ElevationDomain { distance: f64, altitude: f64 },

    /// A caller broke an operation's shape or ordering contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid {field}: {constraint}")]
    Invalid { field: String, constraint: String },

    #[error("grid oracle intractable: {0}")]
    Intractable(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ElevationDomain { .. } => "elevation_domain",
            Error::Contract(_) => "contract",
            Error::NonFinite { .. } => "non_finite",
            Error::Invalid { .. } => "invalid",
            Error::Intractable(_) => "intractable",
            Error::Checkpoint(_) => "checkpoint",
            Error::ConfigParse { .. } => "config_parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
