//! Exact partitioned local depth (PaLD) with a precomputed cohesion cache
//! that extends the cohesion network to a new point in O(n^2).
//!
//! * [`cohesion`]: batch cohesion, natural threshold, strong-link clusters.
//! * [`cache`]: the queryable [`CohesionCache`] and per-point [`QueryOutcome`]s.
//! * [`gpald`]: relevance / support-division tensors for fused dissimilarities.
//! * [`tasks`]: online anomaly scoring and semi-supervised classification.

pub mod cache;
pub mod cohesion;
pub mod dataset;
pub mod dissimilarity;
pub mod error;
pub mod gpald;
pub mod pairs;
pub mod tasks;

pub use cache::{CohesionCache, QueryOutcome, QueryPoint};
pub use cohesion::{
    cohesion_matrix, cohesion_matrix_with, cohesion_network, local_focus, natural_threshold,
    strong_components, CohesionMatrix, CohesionNetwork, LocalFocus, Options, Tolerance,
};

pub use dataset::Dataset;
pub use dissimilarity::{DissimilarityMatrix, Metric};
pub use error::{PaldError, Result};
pub use pairs::PairMatrix;
