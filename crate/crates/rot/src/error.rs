//! Crate-wide error type.

use std::path::PathBuf;

use crate::metrics::ScoreKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error("index out of bounds: {0}")]
    IndexOutOfBounds(String),

    #[error("schema error in {path} line {line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sample of {requested} requested from {available} items")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("{requested} demonstrations requested but only {available} available")]
    NotEnoughDemos { requested: usize, available: usize },

    #[error("endpoint error after {attempts} attempt(s): {message}")]
    Endpoint { message: String, attempts: u32 },

    #[error("no scripted fixture for hash {hash}")]
    FixtureMiss { hash: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("nothing to aggregate: {0}")]
    EmptyAggregate(String),

    #[error("bad bin edges: {0}")]
    BadBins(String),

    #[error("record {instance_id} has no {kind} score")]
    MissingScore {
        instance_id: String,
        kind: ScoreKind,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 3 for backend exhaustion, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Endpoint { .. } => 3,
            _ => 2,
        }
    }
}
