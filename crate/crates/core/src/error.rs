use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates an invariant.
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// A config file line could not be parsed.
    #[error("line {line}: {field}: {reason}")]
    Parse {
        line: usize,
        field: String,
        reason: String,
    },

    /// A required key was absent from a config file.
    #[error("missing required field `{0}`")]
    MissingField(&'static str),

    /// A sweep grid point produced an invalid configuration.
    #[error("sweep point {axis}={value}: {source}")]
    InvalidPoint {
        axis: &'static str,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("markov oracle rejected: {0}")]
    OracleUnsupported(String),

    #[error("unknown preset `{0}` (expected fig2..fig7)")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
