use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SscError>;

#[derive(Debug, Error)]
pub enum SscError {
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symmetric QL iteration did not converge for eigenvalue {0}")]
    EigenNoConvergence(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: row {row}{}: {msg}", path.display(), col.map(|c| format!(", column {c}")).unwrap_or_default())]
    Csv {
        path: PathBuf,
        row: usize,
        col: Option<usize>,
        msg: String,
    },

    #[error("kernel value for pair ({i}, {j}) is not finite")]
    NonFiniteKernel { i: usize, j: usize },

    #[error("row {0} of the affinity matrix has zero sum")]
    ZeroRow(usize),

    #[error("objective returned a non-finite value at evaluation {0}")]
    NonFiniteObjective(usize),
}
