use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One broken invariant found by the validator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Where the problem sits, e.g. `t2[1].cycles[2]`.
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self { location: location.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn list_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("\n  - {x}")).collect()
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("instance is invalid:{}", list_violations(.0))]
    Semantic(Vec<Violation>),

    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("structural infeasibility: {0}")]
    Infeasible(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("aggregation refused: {0}")]
    Aggregation(String),

    #[error("invalid scenario partition: {0}")]
    Partition(String),

    #[error("oracle refused: {0}")]
    Oracle(String),

    #[error("external solver: {0}")]
    External(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
