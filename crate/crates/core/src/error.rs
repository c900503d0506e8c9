use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the PaLD engine and its applications.
#[derive(Debug, Error)]
pub enum PaldError {
    #[error("points {0} and {1} have zero dissimilarity; duplicate points are not allowed (d(z,z) < d(z,y) must hold for distinct points)")]
    DuplicatePoints(usize, usize),

    #[error("dissimilarity matrix is not symmetric at ({0}, {1}): {2} != {3}")]
    NonSymmetric(usize, usize, f64, f64),

    #[error("invalid dissimilarity {value} at ({row}, {col}): entries must be finite and non-negative with a zero diagonal")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("at least {required} points are required, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("the focus pair must consist of two distinct points, got ({0}, {0})")]
    SamePair(usize),

    #[error("invalid tolerance {0}: must be finite and non-negative")]
    InvalidTolerance(f64),

    #[error("fusion weights must be non-negative and sum to 1, got {0:?}")]
    BadWeights(Vec<f64>),

    #[error("tensor law violated: {0}")]
    TensorLaw(String),

    #[error("dense relevance tensors are limited to n <= {max}, got n = {n}")]
    TensorTooLarge { n: usize, max: usize },

    #[error("the cache holds no reference points; supply a precomputed dissimilarity vector instead")]
    MissingReference,

    #[error("the cache holds no class labels")]
    NoLabels,

    #[error("unknown classification method {0:?}")]
    UnknownMethod(String),

    #[error("k = {k} exceeds the number of reference points ({n})")]
    KTooLarge { k: usize, n: usize },

    #[error("scores need at least one positive and one negative label")]
    DegenerateLabels,

    #[error("cannot split {n} samples into {folds} folds")]
    TooFewSamples { n: usize, folds: usize },

    #[error("decision boundary grids need two-dimensional reference points, got d = {0}")]
    NotTwoDimensional(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, PaldError>;
