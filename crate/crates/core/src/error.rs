//! Crate-wide error type.
//!
//! Variants are grouped by how a front end should react to them: usage and
//! parse errors are caller mistakes, model errors are invalid statistical
//! inputs, convergence errors are numerical failures, and I/O errors pass
//! through from the filesystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller violated an interface contract (mismatched lengths,
    /// wrong label sets, unsupported combinations).
    #[error("usage error: {0}")]
    Usage(String),

    /// A statistical model input is invalid (non-positive-definite
    /// covariance, bad priors, inconsistent block layout).
    #[error("model error: {0}")]
    Model(String),

    /// A limiting quantity degenerated (zero variance, vanishing regime).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Numerical quadrature failed to converge; carries the last two
    /// successive estimates for diagnosis.
    #[error(
        "quadrature did not converge within {refinements} refinements \
         (successive estimates {previous} and {last})"
    )]
    Convergence {
        refinements: u32,
        previous: f64,
        last: f64,
    },

    /// A text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An error raised while running one replication of an experiment.
    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_replication(index: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::Replication {
            index,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
