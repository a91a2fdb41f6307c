//! Error types for the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid instance JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {found:?} (expected {expected:?})")]
    SchemaVersion { found: String, expected: String },
}

impl ModelError {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        ModelError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("coupling component {component} has {categories} categories, above the cap of {cap}")]
    ComponentTooLarge {
        component: usize,
        categories: usize,
        cap: usize,
    },
    #[error("{count} categories is too many to enumerate (cap {cap})")]
    TooManyCategories { count: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("axis {axis} has an empty range")]
    DegenerateRange { axis: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GpError {
    #[error("kernel matrix is not positive definite after {retries} jitter increases")]
    SingularKernel { retries: usize },
    #[error("a Gaussian process needs at least one observation")]
    NoObservations,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no path from node {from} to node {to}")]
    NoPath { from: usize, to: usize },
    #[error("node {0} is not in the graph")]
    UnknownNode(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("report was made on instance {reported}, not {actual}")]
    InstanceMismatch { reported: String, actual: String },
    #[error("activation vector has {found} entries, instance has {expected} categories")]
    ActivationLength { found: usize, expected: usize },
    #[error("reported welfare {reported} but re-evaluation gives {recomputed}")]
    WelfareMismatch { reported: f64, recomputed: f64 },
}
