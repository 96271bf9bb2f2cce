use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The design cannot be built with the configured technology, e.g. the
    /// laser would need more than the per-waveguide power ceiling.
    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("no feasible design among {candidates} candidates ({context})")]
    NoFeasibleDesign { candidates: usize, context: String },

    #[error("energy per bit is undefined for injection rate {0}")]
    UndefinedEnergy(f64),

    #[error("latency is undefined: traffic matrix carries no volume")]
    UndefinedLatency,

    #[error("layout error: {0}")]
    Layout(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("trace ingestion: {0}")]
    Ingestion(String),

    #[error("simulation did not drain within {cycles} cycles ({in_flight} packets outstanding)")]
    Livelock { cycles: u64, in_flight: usize },

    #[error("missing coefficient: {0}")]
    MissingCoefficient(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
