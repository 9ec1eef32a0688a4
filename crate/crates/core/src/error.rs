use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the geometry, sampling, estimation and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("subspace lies on the cut locus (largest principal angle {angle:.3e} rad)")]
    CutLocus { angle: f64 },
    #[error("tangent vector is not based at the given subspace")]
    BaseMismatch,
    #[error("empty input")]
    EmptyInput,
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("probability {0} outside (0, 1]")]
    BadProbability(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("requested rank {rank} exceeds min(n, b) = {max}")]
    BadRank { rank: usize, max: usize },
    #[error("numerical computation failed: {0}")]
    ComputationFailed(String),
    #[error("method not applicable: {0}")]
    BadMethod(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
