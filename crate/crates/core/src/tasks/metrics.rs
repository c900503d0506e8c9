use crate::error::{PaldError, Result};

fn check(scores: &[f64], positive: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != positive.len() {
        return Err(PaldError::SizeMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(PaldError::DegenerateLabels);
    }
    Ok((pos, neg))
}

/// Indices sorted by ascending score, grouped into runs of equal scores.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Higher scores mean "more positive".
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, positive)?;
    let mut rank = 0.0;
    let mut positive_ranks = 0.0;
    for group in tie_groups(scores) {
        let len = group.len() as f64;
        let midrank = rank + (len + 1.0) / 2.0;
        let hits = group.iter().filter(|&&i| positive[i]).count() as f64;
        positive_ranks += hits * midrank;
        rank += len;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((positive_ranks - p * (p + 1.0) / 2.0) / (p * q))
}

/// Sum over distinct score thresholds, highest first, of
/// `(recall gain) * precision`.
///
/// Terms are accumulated in double-double arithmetic so that small cases
/// come out correctly rounded.
pub fn average_precision(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, positive)?;
    let mut seen = 0usize;
    let mut hits = 0usize;
    let mut sum = (0.0, 0.0);
    for group in tie_groups(scores).into_iter().rev() {
        let gained = group.iter().filter(|&&i| positive[i]).count();
        seen += group.len();
        hits += gained;
        if gained > 0 {
            let term = divide((gained * hits) as f64, 0.0, seen as f64);
            sum = add(sum, term);
        }
    }
    let (hi, lo) = divide(sum.0, sum.1, pos as f64);
    Ok(hi + lo)
}

/// `(hi + lo) / b` as an unevaluated sum.
fn divide(hi: f64, lo: f64, b: f64) -> (f64, f64) {
    let q = hi / b;
    let rem = (-q).mul_add(b, hi) + lo;
    two_sum(q, rem / b)
}

fn add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(a.0, b.0);
    two_sum(s, e + a.1 + b.1)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Area under the precision-recall curve, taken as average precision.
pub fn pr_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    average_precision(scores, positive)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_example() {
        let scores = [0.9, 0.8, 0.7, 0.6];
        let labels = [true, false, true, false];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 0.75);
        assert_eq!(average_precision(&scores, &labels).unwrap(), 5.0 / 6.0);
    }

    #[test]
    fn separated_and_tied() {
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        assert_eq!(pr_auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 4], &labels).unwrap(), 0.5);
        assert_eq!(average_precision(&[0.3; 4], &labels).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_labels() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[true, true]).unwrap_err(),
            PaldError::DegenerateLabels
        ));
        assert!(average_precision(&[0.1], &[true, false]).is_err());
    }
}
