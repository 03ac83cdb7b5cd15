use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
///
/// `Unidentifiable` is deliberately absent: an unidentifiable target is an
/// answer, reported through [`crate::identify::Identification`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid regime {regime}: {reason}")]
    InvalidRegime { regime: String, reason: String },

    #[error("invalid dataset for regime {regime}: {reason}")]
    InvalidDataset { regime: String, reason: String },

    #[error("graph is not chordal")]
    NotChordal,

    #[error("identification conditions not met: {0}")]
    ConditionsNotMet(String),

    #[error("variable `{0}` has a degenerate range (min = max); add jitter before discretizing")]
    DegenerateVariable(String),

    #[error("grid too large: {cells} cells exceeds the cap of {cap}")]
    GridTooLarge { cells: u128, cap: u128 },

    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },

    #[error("datasets are missing the outcome column `y`")]
    MissingOutcome,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown built-in structure `{0}`")]
    UnknownStructure(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

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
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
