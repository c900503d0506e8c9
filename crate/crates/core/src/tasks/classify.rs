use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::cache::{CohesionCache, QueryOutcome, QueryPoint};
use crate::error::{PaldError, Result};

/// Class association statistic.
///
/// The `*_to` family reads `c[x][t]`, the cohesion of the test point to each
/// reference point `x`; the `*_from` family reads `c[t][x]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CountTo,
    SumTo,
    MaxTo,
    CountFrom,
    SumFrom,
    MaxFrom,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::CountTo,
        Method::SumTo,
        Method::MaxTo,
        Method::CountFrom,
        Method::SumFrom,
        Method::MaxFrom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CountTo => "count_to",
            Method::SumTo => "sum_to",
            Method::MaxTo => "max_to",
            Method::CountFrom => "count_from",
            Method::SumFrom => "sum_from",
            Method::MaxFrom => "max_from",
        }
    }

    fn reads_to(self) -> bool {
        matches!(self, Method::CountTo | Method::SumTo | Method::MaxTo)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PaldError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PaldError::UnknownMethod(s.to_string()))
    }
}

/// Sorted distinct classes and, for each label, its position among them.
pub fn class_index(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let index = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is a class"))
        .collect();
    (classes, index)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScores {
    pub per_class: BTreeMap<String, f64>,
    pub method: Method,
    pub predicted: String,
    /// More than one class attains the maximum; the smallest one is predicted.
    pub tie: bool,
}

pub fn classify(cache: &CohesionCache, t: QueryPoint<'_>, method: Method) -> Result<ClassScores> {
    let labels = cache.labels().ok_or(PaldError::NoLabels)?;
    classify_outcome(&cache.query(t)?, labels, method)
}

/// Scores each class from an existing query against the updated threshold.
pub fn classify_outcome(outcome: &QueryOutcome, labels: &[String], method: Method) -> Result<ClassScores> {
    if labels.len() != outcome.cohesion_to.len() {
        return Err(PaldError::SizeMismatch(format!(
            "{} labels for {} reference points",
            labels.len(),
            outcome.cohesion_to.len()
        )));
    }
    let values = if method.reads_to() {
        &outcome.cohesion_from
    } else {
        &outcome.cohesion_to
    };
    let tau = outcome.tau_updated;
    let (classes, index) = class_index(labels);
    let mut scores = vec![0.0; classes.len()];
    for (&c, &i) in values.iter().zip(&index) {
        let s = &mut scores[i];
        match method {
            Method::CountTo | Method::CountFrom => {
                if c >= tau {
                    *s += 1.0;
                }
            }
            Method::SumTo | Method::SumFrom => {
                if c >= tau {
                    *s += c;
                }
            }
            Method::MaxTo | Method::MaxFrom => *s = s.max(c),
        }
    }
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let winner = scores.iter().position(|&s| s == best).expect("at least one class");
    let tie = scores.iter().filter(|&&s| s == best).count() > 1;
    Ok(ClassScores {
        predicted: classes[winner].clone(),
        per_class: classes.into_iter().zip(scores).collect(),
        method,
        tie,
    })
}
