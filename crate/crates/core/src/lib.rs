//! Parking-lot occupancy analytics and EV charge scheduling.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`ingest`] parses raw occupancy datasets (CNR-style CSV, PKLot-style
//!    per-image XML) into a canonical frame/layout table.
//! 2. [`events`] reconstructs car-parking events from the frame stream,
//!    cleans them, and bins durations into ordinal classes.
//! 3. [`spatial`] clusters slot coordinates into sub-areas (K-Means, DBSCAN).
//! 4. [`features`] assembles the feature matrix: time-of-day features plus
//!    per-area occupancy ratios at event start.
//! 5. [`learners`] trains duration-class predictors (trees, forests,
//!    boosting, logistic, naive Bayes, least squares) under classification,
//!    ordinal-decomposition, or regression framings.
//! 6. [`harness`] runs the experiment protocol: time-ordered split,
//!    stratified cross-validation, grid search, baselines, metrics,
//!    significance tests, and report files.
//! 7. [`scheduler`] turns predicted duration classes into charging windows
//!    and computes a peak-minimizing power allocation.

pub mod events;
pub mod features;
pub mod harness;
pub mod ingest;
pub mod learners;
pub mod scheduler;
pub mod spatial;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by any pipeline stage.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("infeasible schedule: {0}")]
    Infeasible(String),

    #[error("model artifact error: {0}")]
    Artifact(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
