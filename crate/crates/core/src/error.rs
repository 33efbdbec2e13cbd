use std::path::PathBuf;

use thiserror::Error;

use crate::regimes::Condition;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("singular flux evaluation at |Q| = 0 with p = {p} < 2")]
    Singular { p: f64 },

    #[error("cylinder leaves the computed space-time domain: {0}")]
    CylinderOutside(String),

    #[error("only {found} snapshots inside the time window, need at least 3")]
    InsufficientSnapshots { found: usize },

    #[error("iteration exponent kappa = {0} is not positive")]
    KappaNonPositive(f64),

    #[error("parameters not covered by any theorem (violated: {})", fmt_conditions(.0))]
    Inadmissible(Vec<Condition>),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("non-finite state at t = {time}")]
    Diverged { time: f64 },

    #[error("run did not complete: {0}")]
    RunNotCompleted(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn fmt_conditions(c: &[Condition]) -> String {
    c.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
}
