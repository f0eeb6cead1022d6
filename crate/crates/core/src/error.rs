use std::path::PathBuf;

use crate::rates::LinearClassifier;

/// Errors produced anywhere in the training pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(InfeasibilityReport),

    #[error("solver failure: {message}")]
    Solver {
        message: String,
        /// Best classifier found before the failure, when one exists.
        best: Option<Box<LinearClassifier>>,
    },

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn solver(msg: impl Into<String>, best: Option<LinearClassifier>) -> Self {
        Error::Solver {
            message: msg.into(),
            best: best.map(Box::new),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Parse { .. } => 2,
            Error::Infeasible(_) => 3,
            Error::Solver { .. } => 4,
            Error::Io { .. } => 5,
        }
    }
}

/// Which constraint could not be satisfied, and by how much.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityReport {
    pub constraint: usize,
    pub violation: f64,
    pub detail: String,
}

impl std::fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "constraint {} violated by {:.6e} ({})",
            self.constraint, self.violation, self.detail
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
