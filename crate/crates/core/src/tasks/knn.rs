use crate::dissimilarity::Metric;
use crate::error::{PaldError, Result};
use crate::tasks::classify::class_index;

/// The `k`-th smallest entry of `dt` (1-based).
pub fn kth_neighbor_distance(dt: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > dt.len() {
        return Err(PaldError::KTooLarge { k, n: dt.len() });
    }
    let mut d = dt.to_vec();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Distance from `t` to its `k`-th nearest reference point; higher is more
/// anomalous.
pub fn knn_anomaly_score(reference: &[Vec<f64>], t: &[f64], k: usize, metric: Metric) -> Result<f64> {
    let dt: Vec<f64> = reference.iter().map(|y| metric.distance(t, y)).collect();
    kth_neighbor_distance(&dt, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnPrediction {
    pub predicted: String,
    /// Votes per class, in sorted class order.
    pub votes: Vec<(String, usize)>,
    pub tie: bool,
}

/// Majority label among the `k` nearest reference points. Equal distances
/// are broken by reference index, equal votes by the smallest class.
pub fn knn_classify(
    reference: &[Vec<f64>],
    labels: &[String],
    t: &[f64],
    k: usize,
    metric: Metric,
) -> Result<KnnPrediction> {
    let dt: Vec<f64> = reference.iter().map(|y| metric.distance(t, y)).collect();
    knn_classify_distances(&dt, labels, k)
}

pub(crate) fn knn_classify_distances(dt: &[f64], labels: &[String], k: usize) -> Result<KnnPrediction> {
    let n = dt.len();
    if labels.len() != n {
        return Err(PaldError::SizeMismatch(format!("{} labels for {n} points", labels.len())));
    }
    if k == 0 || k > n {
        return Err(PaldError::KTooLarge { k, n });
    }
    let (classes, index) = class_index(labels);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dt[a].total_cmp(&dt[b]).then(a.cmp(&b)));
    let mut votes = vec![0usize; classes.len()];
    for &i in &order[..k] {
        votes[index[i]] += 1;
    }
    let best = *votes.iter().max().expect("k >= 1");
    let winner = votes.iter().position(|&v| v == best).expect("max exists");
    let tie = votes.iter().filter(|&&v| v == best).count() > 1;
    Ok(KnnPrediction {
        predicted: classes[winner].clone(),
        votes: classes.into_iter().zip(votes).collect(),
        tie,
    })
}
