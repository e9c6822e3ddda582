use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid setup: {0}")]
    InvalidSetup(String),

    #[error("ID density is zero at x = {0}")]
    ZeroDensity(f64),

    #[error("selective risk is undefined: no ID sample accepted")]
    UndefinedSelectiveRisk,

    #[error("target {target} unattainable; attainable range is [{min}, {max}]")]
    Unattainable { target: f64, min: f64, max: f64 },

    #[error("unable to meet the targets: {0}")]
    Infeasible(crate::posthoc::Frontier),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid LP instance: {0}")]
    InvalidInstance(String),

    #[error("LP solution violates band structure at items {indices:?}: {message}")]
    StructureViolation { indices: Vec<usize>, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
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
