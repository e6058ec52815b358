use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    // the cause is part of the message and not exposed as a source, so
    // chained reports do not print it twice
    #[error("i/o error on {path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: required column `{column}` not found in header")]
    MissingColumn { column: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular design: column {index} (`{name}`) is linearly dependent on earlier columns")]
    SingularDesign { index: usize, name: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("lag count {lags} must be smaller than the number of observations {n_obs}")]
    LagsTooLarge { lags: usize, n_obs: usize },

    #[error("fama-macbeth: {skipped} of {total} periods failed; more than 20% skipped ({reason})")]
    TooManySkippedPeriods {
        skipped: usize,
        total: usize,
        reason: String,
    },

    #[error("synthetic generator: {0}")]
    Synth(String),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
