//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by dataset ingestion, quantization, compression, and
/// classification stages.
#[derive(Debug, Error)]
pub enum Error {
    /// I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A value or label could not be parsed. `row` is the 1-based data-row
    /// index (header and dimension lines excluded).
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Input violated a content contract (non-finite value, empty dataset, ...).
    #[error("{0}")]
    Validation(String),

    /// Shape mismatch: wrong column count, inconsistent dimensions, ...
    #[error("{0}")]
    Dimension(String),

    /// An argument was outside its documented domain.
    #[error("{0}")]
    Argument(String),

    /// An error wrapped with the pipeline stage it occurred in.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
