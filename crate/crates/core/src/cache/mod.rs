//! The queryable cohesion cache.
//!
//! Building the cache records the focus size `V[x][y] = |U_{x,y}|` of every
//! reference pair and the reference threshold `tau(S)` in O(n^3). A new point
//! `t` is then placed in the extended network `T = S + {t}` in O(n^2):
//!
//! 1. cohesion to `t` only involves comparisons anchored at `t`;
//! 2. cohesion from `t` needs to know whether `t` joins each reference focus,
//!    which grows that focus by exactly one;
//! 3. the threshold `tau(T)` follows from `tau(S)`, the self-cohesion of `t`
//!    and a correction `epsilon` for the foci that `t` joins.
//!
//! The cache is immutable after construction; queries only read it.

mod format;

use std::path::Path;
use std::time::SystemTime;

use rayon::prelude::*;
use serde::Serialize;

use crate::cohesion::{run_rows, threshold_from_sizes, CohesionMatrix, Options, Tolerance};
use crate::dissimilarity::{check_query_vector, check_rows, DissimilarityMatrix, Metric};
use crate::error::{PaldError, Result};
use crate::pairs::PairMatrix;

pub use format::{sig17, FORMAT_VERSION};

/// Raw reference points kept alongside the cache so that queries may be
/// given as points rather than as precomputed dissimilarity vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub points: Vec<Vec<f64>>,
    pub metric: Metric,
}

/// A test point, either as features or as its dissimilarities to every
/// reference point.
#[derive(Debug, Clone, Copy)]
pub enum QueryPoint<'a> {
    Point(&'a [f64]),
    Distances(&'a [f64]),
}

/// Everything known about a test point `t` after one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    /// `c[t][w]` in `T` for each reference point `w`.
    pub cohesion_to: Vec<f64>,
    /// `c[w][t]` in `T` for each reference point `w`.
    pub cohesion_from: Vec<f64>,
    pub self_cohesion: f64,
    pub epsilon: f64,
    pub tau_updated: f64,
    pub strong_neighbors: Vec<usize>,
    pub is_outlier: bool,
}

impl QueryOutcome {
    /// Mutual cohesion `min(c[t][w], c[w][t])` for reference point `w`.
    pub fn weight(&self, w: usize) -> f64 {
        self.cohesion_to[w].min(self.cohesion_from[w])
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.cohesion_to.len()).map(|w| self.weight(w)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CohesionCache {
    sizes: PairMatrix<u32>,
    tau_ref: f64,
    dissimilarities: DissimilarityMatrix,
    labels: Option<Vec<String>>,
    tolerance: Tolerance,
    reference: Option<Reference>,
    built_at: SystemTime,
}

impl CohesionCache {
    pub fn build(d: DissimilarityMatrix, labels: Option<Vec<String>>) -> Result<Self> {
        Self::build_with(d, labels, &Options::default())
    }

    pub fn build_with(
        d: DissimilarityMatrix,
        labels: Option<Vec<String>>,
        options: &Options,
    ) -> Result<Self> {
        let n = d.n();
        check_labels(labels.as_deref(), n)?;
        let tol = options.tolerance;
        d.check_separated(tol.value())?;
        let dense = d.to_dense();

        let count_row = |x: usize| -> Vec<u32> {
            let row_x = &dense[x * n..(x + 1) * n];
            (x + 1..n)
                .map(|y| {
                    let row_y = &dense[y * n..(y + 1) * n];
                    let radius = row_x[y];
                    row_x
                        .iter()
                        .zip(row_y)
                        .filter(|&(&a, &b)| tol.within(a, radius) || tol.within(b, radius))
                        .count() as u32
                })
                .collect()
        };
        let rows: Vec<Vec<u32>> = if options.parallel {
            (0..n).into_par_iter().map(count_row).collect()
        } else {
            (0..n).map(count_row).collect()
        };
        let sizes = PairMatrix::from_upper(n, rows.concat()).expect("one count per pair");
        let tau_ref = threshold_from_sizes(n, sizes.as_upper().iter().map(|&v| f64::from(v)));

        Ok(Self {
            sizes,
            tau_ref,
            dissimilarities: d,
            labels,
            tolerance: tol,
            reference: None,
            built_at: SystemTime::now(),
        })
    }

    /// Builds from raw points and keeps them for point queries.
    pub fn from_points(
        points: Vec<Vec<f64>>,
        metric: Metric,
        labels: Option<Vec<String>>,
        options: &Options,
    ) -> Result<Self> {
        let d = DissimilarityMatrix::from_points(&points, metric)?;
        let cache = Self::build_with(d, labels, options)?;
        if metric == Metric::Precomputed {
            Ok(cache)
        } else {
            Ok(cache.with_reference(points, metric)?)
        }
    }

    /// Attaches reference points. Their dissimilarities must reproduce the
    /// cached ones exactly.
    pub fn with_reference(mut self, points: Vec<Vec<f64>>, metric: Metric) -> Result<Self> {
        if metric == Metric::Precomputed {
            return Err(PaldError::MissingReference);
        }
        if points.len() != self.n() {
            return Err(PaldError::SizeMismatch(format!(
                "cache has {} reference points, got {}",
                self.n(),
                points.len()
            )));
        }
        check_rows(&points)?;
        for (x, y, v) in self.dissimilarities.pairs().iter() {
            let recomputed = metric.distance(&points[x], &points[y]);
            if recomputed != v {
                return Err(PaldError::SizeMismatch(format!(
                    "reference points disagree with cached dissimilarity d({x},{y}) = {v} (recomputed {recomputed})"
                )));
            }
        }
        self.reference = Some(Reference { points, metric });
        Ok(self)
    }

    pub(crate) fn from_parts(
        sizes: PairMatrix<u32>,
        tau_ref: f64,
        dissimilarities: DissimilarityMatrix,
        labels: Option<Vec<String>>,
        tolerance: Tolerance,
        built_at: SystemTime,
    ) -> Self {
        Self {
            sizes,
            tau_ref,
            dissimilarities,
            labels,
            tolerance,
            reference: None,
            built_at,
        }
    }

    pub fn n(&self) -> usize {
        self.dissimilarities.n()
    }

    /// Focus cardinalities `|U_{x,y}|` over the reference set.
    pub fn sizes(&self) -> &PairMatrix<u32> {
        &self.sizes
    }

    pub fn focus_size(&self, x: usize, y: usize) -> u32 {
        self.sizes.get(x, y)
    }

    /// Natural threshold of the reference set, `tau(S)`.
    pub fn tau_ref(&self) -> f64 {
        self.tau_ref
    }

    pub fn dissimilarities(&self) -> &DissimilarityMatrix {
        &self.dissimilarities
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    pub fn built_at(&self) -> SystemTime {
        self.built_at
    }

    pub fn format_version(&self) -> u32 {
        FORMAT_VERSION
    }

    /// `d(t, y)` for every reference point `y`.
    pub fn dissimilarity_to_reference(&self, t: QueryPoint<'_>) -> Result<Vec<f64>> {
        let dt = match t {
            QueryPoint::Distances(dt) => dt.to_vec(),
            QueryPoint::Point(p) => {
                let reference = self.reference.as_ref().ok_or(PaldError::MissingReference)?;
                let dim = reference.points[0].len();
                if p.len() != dim {
                    return Err(PaldError::DimensionMismatch {
                        expected: dim,
                        got: p.len(),
                    });
                }
                reference
                    .points
                    .iter()
                    .map(|y| reference.metric.distance(p, y))
                    .collect()
            }
        };
        check_query_vector(&dt, self.n(), self.tolerance.value())?;
        Ok(dt)
    }

    /// Cohesion of each reference point to `t`, and `t`'s self-cohesion.
    ///
    /// Every focus `U_{t,y}` is anchored at `t`, so no cached sizes are read.
    pub fn cohesion_to_new(&self, dt: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.n();
        check_query_vector(dt, n, self.tolerance.value())?;
        let tol = self.tolerance;
        let mut cohesion = vec![0.0; n];
        let mut self_cohesion = 0.0;
        let mut row = vec![0.0; n];
        let mut members: Vec<(usize, f64)> = Vec::with_capacity(n);
        for y in 0..n {
            self.dissimilarities.row_into(y, &mut row);
            let radius = dt[y];
            members.clear();
            for (w, (&to_t, &to_y)) in dt.iter().zip(&row).enumerate() {
                if tol.within(to_t, radius) || tol.within(to_y, radius) {
                    members.push((w, tol.support(to_t, to_y)));
                }
            }
            // t itself is always in its own focus and fully supports itself
            let size = (members.len() + 1) as f64;
            self_cohesion += 1.0 / size;
            for &(w, s) in &members {
                cohesion[w] += s / size;
            }
        }
        let scale = n as f64;
        cohesion.iter_mut().for_each(|c| *c /= scale);
        Ok((cohesion, self_cohesion / scale))
    }

    /// Cohesion of `t` to each reference point, and the threshold correction
    /// `epsilon` for the reference foci that `t` joins.
    pub fn cohesion_from_new(&self, dt: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.n();
        check_query_vector(dt, n, self.tolerance.value())?;
        let tol = self.tolerance;
        let mut cohesion = vec![0.0; n];
        let mut correction = 0.0;
        let pairs = self
            .sizes
            .iter()
            .zip(self.dissimilarities.pairs().as_upper());
        for ((w, y, size), &radius) in pairs {
            let (to_w, to_y) = (dt[w], dt[y]);
            if tol.within(to_w, radius) || tol.within(to_y, radius) {
                let before = f64::from(size);
                let after = before + 1.0;
                let s = tol.support(to_w, to_y);
                cohesion[w] += s / after;
                cohesion[y] += (1.0 - s) / after;
                // both orders (w, y) and (y, w)
                correction += 2.0 / (after * before);
            }
        }
        let nf = n as f64;
        cohesion.iter_mut().for_each(|c| *c /= nf);
        Ok((cohesion, correction / (2.0 * nf * (nf + 1.0))))
    }

    /// `tau(T) = tau(S) (n-1)/(n+1) + c[t][t]/(n+1) - epsilon`.
    pub fn updated_threshold(&self, self_cohesion: f64, epsilon: f64) -> f64 {
        marginal_threshold(self.tau_ref, self_cohesion, epsilon, self.n())
    }

    pub fn query(&self, t: QueryPoint<'_>) -> Result<QueryOutcome> {
        let dt = self.dissimilarity_to_reference(t)?;
        self.query_distances(&dt)
    }

    pub fn query_distances(&self, dt: &[f64]) -> Result<QueryOutcome> {
        let (cohesion_to, self_cohesion) = self.cohesion_to_new(dt)?;
        let (cohesion_from, epsilon) = self.cohesion_from_new(dt)?;
        let tau_updated = self.updated_threshold(self_cohesion, epsilon);
        let strong_neighbors: Vec<usize> = cohesion_to
            .iter()
            .zip(&cohesion_from)
            .enumerate()
            .filter(|&(_, (a, b))| a.min(*b) >= tau_updated)
            .map(|(y, _)| y)
            .collect();
        let is_outlier = strong_neighbors.is_empty();
        Ok(QueryOutcome {
            cohesion_to,
            cohesion_from,
            self_cohesion,
            epsilon,
            tau_updated,
            strong_neighbors,
            is_outlier,
        })
    }

    /// The reference cohesion matrix, recomputed with the cached focus sizes
    /// so that every focus is scanned once without counting it first.
    pub fn lazy_network(&self) -> CohesionMatrix {
        self.lazy_network_with(true)
    }

    pub fn lazy_network_with(&self, parallel: bool) -> CohesionMatrix {
        let n = self.n();
        let dense = self.dissimilarities.to_dense();
        let tol = self.tolerance;
        let sizes = &self.sizes;
        let accumulate_row = |mut acc: Vec<f64>, x: usize| {
            let row_x = &dense[x * n..(x + 1) * n];
            for y in x + 1..n {
                let row_y = &dense[y * n..(y + 1) * n];
                let radius = row_x[y];
                let size = f64::from(sizes.get(x, y));
                for z in 0..n {
                    let (a, b) = (row_x[z], row_y[z]);
                    if tol.within(a, radius) || tol.within(b, radius) {
                        let s = tol.support(a, b);
                        acc[x * n + z] += s / size;
                        acc[y * n + z] += (1.0 - s) / size;
                    }
                }
            }
            acc
        };
        let mut acc = run_rows(n, parallel, accumulate_row);
        let scale = (n - 1) as f64;
        acc.iter_mut().for_each(|v| *v /= scale);
        CohesionMatrix::from_raw(n, acc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        format::save(self, path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        format::load(path.as_ref())
    }

    pub fn write_to(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        format::write(self, out)
    }

    /// Parses cache text; `origin` only labels error messages.
    pub fn read_from(text: &str, origin: &Path) -> Result<Self> {
        format::parse(text, origin, SystemTime::now())
    }
}

/// The marginal threshold update shared by the exact and generalized caches.
pub fn marginal_threshold(tau_ref: f64, self_cohesion: f64, epsilon: f64, n: usize) -> f64 {
    let nf = n as f64;
    tau_ref * (nf - 1.0) / (nf + 1.0) + self_cohesion / (nf + 1.0) - epsilon
}

fn check_labels(labels: Option<&[String]>, n: usize) -> Result<()> {
    match labels {
        Some(l) if l.len() != n => Err(PaldError::SizeMismatch(format!(
            "{} labels for {n} points",
            l.len()
        ))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::cohesion::{cohesion_matrix_with, natural_threshold};

    fn line_cache(xs: &[f64]) -> CohesionCache {
        let pts = xs.iter().map(|&x| vec![x]).collect();
        CohesionCache::from_points(pts, Metric::Euclidean, None, &Options::sequential()).unwrap()
    }

    #[test]
    fn two_point_cache() {
        let cache = line_cache(&[0.0, 1.0]);
        assert_eq!(cache.focus_size(0, 1), 2);
        assert_eq!(cache.tau_ref(), 0.25);
    }

    #[test]
    fn three_point_cache() {
        let cache = line_cache(&[0.0, 1.0, 3.0]);
        assert_eq!(cache.sizes().as_upper(), &[2, 3, 3]);
        assert_relative_eq!(cache.tau_ref(), 7.0 / 36.0, max_relative = 1e-15);
    }

    #[test]
    fn distant_point_joins_no_focus() {
        let cache = line_cache(&[0.0, 1.0]);
        let dt = cache.dissimilarity_to_reference(QueryPoint::Point(&[3.0])).unwrap();
        assert_eq!(dt, vec![3.0, 2.0]);
        let (to, self_c) = cache.cohesion_to_new(&dt).unwrap();
        assert_eq!(to, vec![0.0, 0.0]);
        assert_relative_eq!(self_c, 1.0 / 3.0, max_relative = 1e-15);
        let (from, eps) = cache.cohesion_from_new(&dt).unwrap();
        assert_eq!(from, vec![0.0, 0.0]);
        assert_eq!(eps, 0.0);
        let tau = cache.updated_threshold(self_c, eps);
        assert_relative_eq!(tau, 7.0 / 36.0, max_relative = 1e-15);

        let out = cache.query(QueryPoint::Point(&[3.0])).unwrap();
        assert!(out.strong_neighbors.is_empty());
        assert!(out.is_outlier);
    }

    #[test]
    fn near_point_corrects_the_threshold() {
        let cache = line_cache(&[0.0, 1.0]);
        let out = cache.query(QueryPoint::Point(&[-0.5])).unwrap();
        assert_relative_eq!(out.self_cohesion, 5.0 / 12.0, max_relative = 1e-15);
        assert_relative_eq!(out.epsilon, 1.0 / 36.0, max_relative = 1e-15);
        assert_relative_eq!(out.tau_updated, 7.0 / 36.0, max_relative = 1e-15);
    }

    #[test]
    fn marginal_formula_fixed_point() {
        let cache = line_cache(&[0.0, 1.0]);
        assert_relative_eq!(cache.updated_threshold(0.5, 0.0), 0.25, max_relative = 1e-15);
        assert_relative_eq!(
            cache.updated_threshold(5.0 / 12.0, 1.0 / 36.0),
            7.0 / 36.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn query_errors() {
        let cache = line_cache(&[0.0, 1.0]);
        assert!(matches!(
            cache.query(QueryPoint::Point(&[1.0])).unwrap_err(),
            PaldError::DuplicatePoints(2, 1)
        ));
        assert!(matches!(
            cache.query(QueryPoint::Distances(&[1.0, 2.0, 3.0])).unwrap_err(),
            PaldError::DimensionMismatch { expected: 2, got: 3 }
        ));
        assert!(matches!(
            cache.query(QueryPoint::Point(&[1.0, 2.0])).unwrap_err(),
            PaldError::DimensionMismatch { expected: 1, got: 2 }
        ));
        let bare = CohesionCache::build(cache.dissimilarities().clone(), None).unwrap();
        assert!(matches!(
            bare.query(QueryPoint::Point(&[5.0])).unwrap_err(),
            PaldError::MissingReference
        ));
    }

    #[test]
    fn single_point_reference_is_rejected() {
        let err = CohesionCache::from_points(
            vec![vec![0.0]],
            Metric::Euclidean,
            None,
            &Options::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PaldError::TooFewPoints { .. }));
    }

    #[test]
    fn lazy_network_matches_batch_bitwise() {
        let xs: Vec<f64> = (0..25).map(|i| ((i * 37 % 101) as f64).sqrt()).collect();
        let cache = line_cache(&xs);
        let batch = cohesion_matrix_with(cache.dissimilarities(), &Options::sequential()).unwrap();
        let lazy = cache.lazy_network_with(false);
        assert_eq!(batch, lazy);
        assert_relative_eq!(natural_threshold(&lazy), cache.tau_ref(), max_relative = 1e-12);
    }

    #[test]
    fn reference_must_match_cached_dissimilarities() {
        let cache = line_cache(&[0.0, 1.0, 3.0]);
        let d = cache.dissimilarities().clone();
        let bare = CohesionCache::build(d, None).unwrap();
        let err = bare
            .clone()
            .with_reference(vec![vec![0.0], vec![1.0], vec![4.0]], Metric::Euclidean)
            .unwrap_err();
        assert!(matches!(err, PaldError::SizeMismatch(_)));
        assert!(bare
            .with_reference(vec![vec![0.0], vec![1.0], vec![3.0]], Metric::Euclidean)
            .is_ok());
    }

    #[test]
    fn labels_must_match_n() {
        let d = line_cache(&[0.0, 1.0]).dissimilarities().clone();
        assert!(CohesionCache::build(d, Some(vec!["a".into()])).is_err());
    }
}
