use serde::Serialize;

use crate::cache::{CohesionCache, QueryOutcome, QueryPoint};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnomalyScore {
    /// `max_x min(c[x][t], c[t][x])`; higher is more normal.
    pub raw: f64,
    /// `-raw`, so that higher is more anomalous.
    pub rank_score: f64,
}

/// Scores `t` against a cache built over normal points only.
pub fn anomaly_score(cache: &CohesionCache, t: QueryPoint<'_>) -> Result<AnomalyScore> {
    Ok(anomaly_score_from(&cache.query(t)?))
}

pub fn anomaly_score_from(outcome: &QueryOutcome) -> AnomalyScore {
    let raw = outcome.weights().into_iter().fold(0.0, f64::max);
    AnomalyScore {
        raw,
        rank_score: -raw,
    }
}
