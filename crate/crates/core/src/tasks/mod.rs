//! Online anomaly scoring and semi-supervised classification on top of
//! [`CohesionCache`](crate::CohesionCache) queries, with knn baselines,
//! ranking metrics and fold-based evaluation.

mod anomaly;
mod boundary;
mod classify;
mod eval;
mod knn;
mod metrics;
mod split;

pub use anomaly::{anomaly_score, anomaly_score_from, AnomalyScore};
pub use boundary::{decision_boundary_grid, Bounds, GridCell};
pub use classify::{class_index, classify, classify_outcome, ClassScores, Method};
pub use eval::{
    cross_validate_anomaly, cross_validate_classifier, evaluate_anomaly_split,
    evaluate_classifier_split, Classifier, EvalReport, FoldMetrics, PointRecord, Scorer,
};
pub use knn::{kth_neighbor_distance, knn_anomaly_score, knn_classify, KnnPrediction};
pub use metrics::{average_precision, pr_auc, roc_auc};
pub use split::{stratified_kfold, Fold};
