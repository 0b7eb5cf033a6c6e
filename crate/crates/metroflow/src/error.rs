//! Crate-wide error type.
//!
//! Variants are grouped by failure class rather than by module so the CLI can
//! map them onto exit codes: configuration/input problems versus numeric
//! failures raised while fitting or training.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or contradictory configuration (bad schema, unknown key,
    /// invalid parameter combination).
    #[error("config error: {0}")]
    Config(String),

    /// Invalid input data: unreadable files, unparseable values, references
    /// to things that do not exist.
    #[error("input error: {0}")]
    Input(String),

    /// A parameter value outside its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("unknown station code `{0}`")]
    UnknownStation(String),

    #[error("no route between `{origin}` and `{destination}`")]
    NoRoute { origin: String, destination: String },

    /// Not enough history to satisfy a request (too few days, too short a
    /// series, no prior same-weekday dates).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Numeric failure inside an algorithm: non-finite loss, singular fit,
    /// divergent iteration.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An error that occurred inside a named pipeline stage.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True when the failure is numeric (as opposed to bad input or config).
    /// Stage wrappers inherit the classification of their source.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric(_) => true,
            Error::Stage { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
