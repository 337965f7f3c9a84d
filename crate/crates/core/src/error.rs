//! Error type shared by matrix construction, the solvers, and the
//! experiment harness.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {index} has (near-)zero norm and cannot be normalized")]
    ZeroColumn { index: usize },

    #[error("operation needs at least 2 columns, got {cols}")]
    TooFewColumns { cols: usize },

    #[error("invalid dimensions: m = {m}, n = {n}")]
    InvalidDims { m: usize, n: usize },

    #[error("bad histogram bins: {0}")]
    BadBins(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("rank-deficient matrix: {0}")]
    RankDeficient(String),

    #[error("degenerate least-squares system: {0}")]
    DegenerateLs(String),

    #[error("sparsity {t} exceeds limit {limit}")]
    BadSparsity { t: usize, limit: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{method} failed at (m = {m}, n = {n}, d = {d:?}), repeat {repeat}: {source}")]
    Bench {
        method: String,
        m: usize,
        n: usize,
        d: Option<usize>,
        repeat: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit class: 1 for configuration/input problems, 2 for
    /// numerical failures inside a solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ZeroColumn { .. }
            | Error::NonFinite { .. }
            | Error::RankDeficient(_)
            | Error::DegenerateLs(_) => 2,
            Error::Bench { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
