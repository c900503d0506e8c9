use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{CohesionCache, QueryPoint};
use crate::cohesion::Options;
use crate::dissimilarity::Metric;
use crate::error::{PaldError, Result};
use crate::tasks::anomaly::anomaly_score;
use crate::tasks::classify::{classify_outcome, Method};
use crate::tasks::knn::{knn_anomaly_score, knn_classify};
use crate::tasks::metrics::{average_precision, roc_auc};
use crate::tasks::split::stratified_kfold;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Pald,
    Knn { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classifier {
    Pald(Method),
    Knn { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub fold: usize,
    pub truth: String,
    /// Rank score for anomaly runs (higher is more anomalous), score of the
    /// predicted class for classification runs.
    pub score: f64,
    pub predicted: Option<String>,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// `None` when the fold's test set holds a single class.
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Pooled metrics over all held-out points plus per-fold breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub accuracy: Option<f64>,
    pub per_fold: Vec<FoldMetrics>,
    pub points: Vec<PointRecord>,
}

impl EvalReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(s, "points evaluated: {}", self.points.len());
        let _ = writeln!(s, "folds: {}", self.per_fold.len());
        if self.roc_auc.is_some() {
            let _ = writeln!(s, "ROC AUC: {}", opt(self.roc_auc));
            let _ = writeln!(s, "PR AUC:  {}", opt(self.pr_auc));
        }
        if self.accuracy.is_some() {
            let _ = writeln!(s, "accuracy: {}", opt(self.accuracy));
            let ties = self.points.iter().filter(|p| p.tie).count();
            let _ = writeln!(s, "ties: {ties}");
        }
        s
    }

    /// One line per fold: `fold,n_train,n_test,roc_auc,pr_auc,accuracy`.
    pub fn folds_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let mut s = String::from("fold,n_train,n_test,roc_auc,pr_auc,accuracy\n");
        for f in &self.per_fold {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                f.fold,
                f.n_train,
                f.n_test,
                opt(f.roc_auc),
                opt(f.pr_auc),
                opt(f.accuracy)
            );
        }
        s
    }
}

fn anomaly_metrics(records: &[PointRecord]) -> (Option<f64>, Option<f64>) {
    let scores: Vec<f64> = records.iter().map(|r| r.score).collect();
    let truth: Vec<bool> = records.iter().map(|r| r.truth == "1").collect();
    (roc_auc(&scores, &truth).ok(), average_precision(&scores, &truth).ok())
}

fn accuracy(records: &[PointRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let hits = records
        .iter()
        .filter(|r| r.predicted.as_deref() == Some(r.truth.as_str()))
        .count();
    Some(hits as f64 / records.len() as f64)
}

fn check_lengths(points: &[Vec<f64>], labels: usize) -> Result<()> {
    if points.len() != labels {
        return Err(PaldError::SizeMismatch(format!(
            "{labels} labels for {} points",
            points.len()
        )));
    }
    Ok(())
}

fn score_anomalies(
    normal: Vec<Vec<f64>>,
    test: &[(usize, &[f64], bool)],
    fold: usize,
    scorer: Scorer,
    metric: Metric,
    options: &Options,
) -> Result<Vec<PointRecord>> {
    let cache = match scorer {
        Scorer::Pald => Some(CohesionCache::from_points(normal.clone(), metric, None, options)?),
        Scorer::Knn { .. } => None,
    };
    test.par_iter()
        .map(|&(index, t, anomalous)| {
            let score = match (&cache, scorer) {
                (Some(c), _) => anomaly_score(c, QueryPoint::Point(t))?.rank_score,
                (None, Scorer::Knn { k }) => knn_anomaly_score(&normal, t, k, metric)?,
                (None, Scorer::Pald) => unreachable!(),
            };
            Ok(PointRecord {
                index,
                fold,
                truth: if anomalous { "1" } else { "0" }.to_string(),
                score,
                predicted: None,
                tie: false,
            })
        })
        .collect()
}

/// Scores `test` against a reference built from `train` with anomalies
/// removed.
pub fn evaluate_anomaly_split(
    train: &[Vec<f64>],
    train_anomaly: &[bool],
    test: &[Vec<f64>],
    test_anomaly: &[bool],
    scorer: Scorer,
    metric: Metric,
    options: &Options,
) -> Result<EvalReport> {
    check_lengths(train, train_anomaly.len())?;
    check_lengths(test, test_anomaly.len())?;
    let normal: Vec<Vec<f64>> = train
        .iter()
        .zip(train_anomaly)
        .filter(|(_, &a)| !a)
        .map(|(p, _)| p.clone())
        .collect();
    let n_train = normal.len();
    let queries: Vec<(usize, &[f64], bool)> = test
        .iter()
        .zip(test_anomaly)
        .enumerate()
        .map(|(i, (p, &a))| (i, p.as_slice(), a))
        .collect();
    let points = score_anomalies(normal, &queries, 0, scorer, metric, options)?;
    let (roc, pr) = anomaly_metrics(&points);
    Ok(EvalReport {
        roc_auc: roc,
        pr_auc: pr,
        accuracy: None,
        per_fold: vec![FoldMetrics {
            fold: 0,
            n_train,
            n_test: points.len(),
            roc_auc: roc,
            pr_auc: pr,
            accuracy: None,
        }],
        points,
    })
}

/// Stratified k-fold anomaly evaluation: every point is scored once against
/// the normal points of the other folds.
pub fn cross_validate_anomaly(
    points: &[Vec<f64>],
    anomaly: &[bool],
    folds: usize,
    seed: u64,
    scorer: Scorer,
    metric: Metric,
    options: &Options,
) -> Result<EvalReport> {
    check_lengths(points, anomaly.len())?;
    if !anomaly.iter().any(|&a| a) || anomaly.iter().all(|&a| a) {
        return Err(PaldError::DegenerateLabels);
    }
    let mut records = Vec::with_capacity(points.len());
    let mut per_fold = Vec::with_capacity(folds);
    for (f, fold) in stratified_kfold(anomaly, folds, seed)?.into_iter().enumerate() {
        let normal: Vec<Vec<f64>> = fold
            .train
            .iter()
            .filter(|&&i| !anomaly[i])
            .map(|&i| points[i].clone())
            .collect();
        let n_train = normal.len();
        let queries: Vec<(usize, &[f64], bool)> = fold
            .test
            .iter()
            .map(|&i| (i, points[i].as_slice(), anomaly[i]))
            .collect();
        let fold_records = score_anomalies(normal, &queries, f, scorer, metric, options)?;
        let (roc, pr) = anomaly_metrics(&fold_records);
        per_fold.push(FoldMetrics {
            fold: f,
            n_train,
            n_test: fold_records.len(),
            roc_auc: roc,
            pr_auc: pr,
            accuracy: None,
        });
        records.extend(fold_records);
    }
    records.sort_by_key(|r| r.index);
    let (roc, pr) = anomaly_metrics(&records);
    Ok(EvalReport {
        roc_auc: roc,
        pr_auc: pr,
        accuracy: None,
        per_fold,
        points: records,
    })
}

fn classify_points(
    train: &[Vec<f64>],
    train_labels: &[String],
    test: &[(usize, &[f64], &str)],
    fold: usize,
    classifier: Classifier,
    metric: Metric,
    options: &Options,
) -> Result<Vec<PointRecord>> {
    let cache = match classifier {
        Classifier::Pald(_) => Some(CohesionCache::from_points(
            train.to_vec(),
            metric,
            Some(train_labels.to_vec()),
            options,
        )?),
        Classifier::Knn { .. } => None,
    };
    test.par_iter()
        .map(|&(index, t, truth)| {
            let (predicted, score, tie) = match (&cache, classifier) {
                (Some(c), Classifier::Pald(method)) => {
                    let outcome = c.query(QueryPoint::Point(t))?;
                    let s = classify_outcome(&outcome, train_labels, method)?;
                    let score = s.per_class[&s.predicted];
                    (s.predicted, score, s.tie)
                }
                (_, Classifier::Knn { k }) => {
                    let p = knn_classify(train, train_labels, t, k, metric)?;
                    let votes = p.votes.iter().find(|(c, _)| *c == p.predicted).map_or(0, |v| v.1);
                    (p.predicted, votes as f64, p.tie)
                }
                (None, Classifier::Pald(_)) => unreachable!(),
            };
            Ok(PointRecord {
                index,
                fold,
                truth: truth.to_string(),
                score,
                predicted: Some(predicted),
                tie,
            })
        })
        .collect()
}

pub fn evaluate_classifier_split(
    train: &[Vec<f64>],
    train_labels: &[String],
    test: &[Vec<f64>],
    test_labels: &[String],
    classifier: Classifier,
    metric: Metric,
    options: &Options,
) -> Result<EvalReport> {
    check_lengths(train, train_labels.len())?;
    check_lengths(test, test_labels.len())?;
    let queries: Vec<(usize, &[f64], &str)> = test
        .iter()
        .zip(test_labels)
        .enumerate()
        .map(|(i, (p, l))| (i, p.as_slice(), l.as_str()))
        .collect();
    let points = classify_points(train, train_labels, &queries, 0, classifier, metric, options)?;
    let acc = accuracy(&points);
    Ok(EvalReport {
        roc_auc: None,
        pr_auc: None,
        accuracy: acc,
        per_fold: vec![FoldMetrics {
            fold: 0,
            n_train: train.len(),
            n_test: points.len(),
            roc_auc: None,
            pr_auc: None,
            accuracy: acc,
        }],
        points,
    })
}

/// Stratified k-fold classification: each point is classified once with the
/// other folds as labelled reference data.
pub fn cross_validate_classifier(
    points: &[Vec<f64>],
    labels: &[String],
    folds: usize,
    seed: u64,
    classifier: Classifier,
    metric: Metric,
    options: &Options,
) -> Result<EvalReport> {
    check_lengths(points, labels.len())?;
    let mut records = Vec::with_capacity(points.len());
    let mut per_fold = Vec::with_capacity(folds);
    for (f, fold) in stratified_kfold(labels, folds, seed)?.into_iter().enumerate() {
        let train: Vec<Vec<f64>> = fold.train.iter().map(|&i| points[i].clone()).collect();
        let train_labels: Vec<String> = fold.train.iter().map(|&i| labels[i].clone()).collect();
        let queries: Vec<(usize, &[f64], &str)> = fold
            .test
            .iter()
            .map(|&i| (i, points[i].as_slice(), labels[i].as_str()))
            .collect();
        let fold_records =
            classify_points(&train, &train_labels, &queries, f, classifier, metric, options)?;
        per_fold.push(FoldMetrics {
            fold: f,
            n_train: train.len(),
            n_test: fold_records.len(),
            roc_auc: None,
            pr_auc: None,
            accuracy: accuracy(&fold_records),
        });
        records.extend(fold_records);
    }
    records.sort_by_key(|r| r.index);
    Ok(EvalReport {
        roc_auc: None,
        pr_auc: None,
        accuracy: accuracy(&records),
        per_fold,
        points: records,
    })
}
