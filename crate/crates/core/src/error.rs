use std::path::PathBuf;

use crate::instance::Violation;
use crate::lp::LpError;
use crate::policy::PolicyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("online type {online} has non-integral arrival rate {rate}")]
    NonIntegralRate { online: usize, rate: f64 },

    #[error("degree {degree} exceeds the number of online types {horizon}")]
    DegreeTooLarge { degree: usize, horizon: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed config: {0}")]
    Config(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a bug in this crate.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Lp(e) => !e.is_internal(),
            // A missing LP or table means the caller wired policies wrongly.
            Error::Policy(e) => !matches!(e, PolicyError::MissingLp(_) | PolicyError::MissingTable),
            _ => true,
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
