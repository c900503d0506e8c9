//! Pairwise dissimilarities and their validation.
//!
//! Every routine downstream assumes `d(x, y) = d(y, x)` and
//! `d(z, z) = 0 < d(z, y)` for distinct points, so both are checked here once,
//! at construction, rather than in the O(n^3) loops.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PaldError, Result};
use crate::pairs::PairMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    /// Input rows already are the dissimilarity matrix.
    Precomputed,
}

impl Metric {
    /// Distance between two feature vectors of equal length.
    ///
    /// `Precomputed` has no point-level distance; it is rejected by callers
    /// before reaching here.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum(),
            Metric::Precomputed => panic!("precomputed metric has no point distance"),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Precomputed => "precomputed",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "manhattan" | "l1" | "cityblock" => Ok(Metric::Manhattan),
            "precomputed" => Ok(Metric::Precomputed),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// Symmetric dissimilarities over `n` points, zero on the diagonal and
/// strictly positive elsewhere. Only the upper triangle is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    values: PairMatrix<f64>,
}

impl DissimilarityMatrix {
    /// Validates off-diagonal values given in row-major upper-triangular order.
    pub fn from_upper(n: usize, values: Vec<f64>) -> Result<Self> {
        let values = PairMatrix::from_upper(n, values).ok_or_else(|| {
            PaldError::SizeMismatch(format!(
                "{n} points need {} pair values",
                crate::pairs::pair_count(n)
            ))
        })?;
        Self::from_pairs(values)
    }

    pub fn from_pairs(values: PairMatrix<f64>) -> Result<Self> {
        let n = values.n();
        if n < 2 {
            return Err(PaldError::TooFewPoints { required: 2, got: n });
        }
        for (x, y, v) in values.iter() {
            check_entry(x, y, v)?;
        }
        Ok(Self { values })
    }

    /// Builds from a full square matrix, checking symmetry, the zero diagonal
    /// and positivity of every off-diagonal entry.
    pub fn from_square(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(PaldError::TooFewPoints { required: 2, got: n });
        }
        for row in rows {
            if row.len() != n {
                return Err(PaldError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        for (x, row) in rows.iter().enumerate() {
            let diag = row[x];
            if diag != 0.0 {
                return Err(PaldError::NegativeEntry {
                    row: x,
                    col: x,
                    value: diag,
                });
            }
            for y in x + 1..n {
                let (a, b) = (row[y], rows[y][x]);
                if a.is_nan() || b.is_nan() || a != b {
                    return Err(PaldError::NonSymmetric(x, y, a, b));
                }
            }
        }
        let values = PairMatrix::from_fn(n, |x, y| rows[x][y]);
        Self::from_pairs(values)
    }

    /// Dissimilarities between all rows of `points` under `metric`.
    ///
    /// With `Metric::Precomputed`, `points` must itself be the square matrix.
    pub fn from_points(points: &[Vec<f64>], metric: Metric) -> Result<Self> {
        if metric == Metric::Precomputed {
            return Self::from_square(points);
        }
        let n = points.len();
        if n < 2 {
            return Err(PaldError::TooFewPoints { required: 2, got: n });
        }
        check_rows(points)?;
        let values = PairMatrix::from_fn(n, |x, y| metric.distance(&points[x], &points[y]));
        Self::from_pairs(values)
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    /// `d(x, y)`, zero when `x == y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        if x == y {
            0.0
        } else {
            self.values.get(x, y)
        }
    }

    pub fn pairs(&self) -> &PairMatrix<f64> {
        &self.values
    }

    /// Writes row `x` (all `d(x, .)`) into `out`, which must hold `n` values.
    pub fn row_into(&self, x: usize, out: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(out.len(), n);
        let upper = self.values.as_upper();
        // column x of the strict upper triangle, rows 0..x
        let mut offset = x.wrapping_sub(1);
        for (w, slot) in out.iter_mut().enumerate().take(x) {
            *slot = upper[offset];
            offset += n - w - 2;
        }
        out[x] = 0.0;
        let start = x * n - x * (x + 1) / 2;
        out[x + 1..].copy_from_slice(&upper[start..start + (n - x - 1)]);
    }

    /// Row-major dense copy, `n * n` values.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut dense = vec![0.0; n * n];
        for (x, y, v) in self.values.iter() {
            dense[x * n + y] = v;
            dense[y * n + x] = v;
        }
        dense
    }

    /// Smallest off-diagonal dissimilarity.
    pub fn min_positive(&self) -> f64 {
        self.values
            .as_upper()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest dissimilarity (the diameter of the point set).
    pub fn diameter(&self) -> f64 {
        self.values.as_upper().iter().copied().fold(0.0, f64::max)
    }

    /// Rejects any off-diagonal value `<= tolerance`, since such pairs would
    /// be tied with the diagonal.
    pub(crate) fn check_separated(&self, tolerance: f64) -> Result<()> {
        if tolerance > 0.0 {
            for (x, y, v) in self.values.iter() {
                if v <= tolerance {
                    return Err(PaldError::DuplicatePoints(x, y));
                }
            }
        }
        Ok(())
    }

    /// Restriction to the points in `keep`, in that order.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        for &i in keep {
            if i >= self.n() {
                return Err(PaldError::IndexOutOfRange {
                    index: i,
                    n: self.n(),
                });
            }
        }
        let values = PairMatrix::from_fn(keep.len(), |a, b| self.get(keep[a], keep[b]));
        Self::from_pairs(values)
    }
}

fn check_entry(x: usize, y: usize, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(PaldError::NegativeEntry {
            row: x,
            col: y,
            value: v,
        });
    }
    if v == 0.0 {
        return Err(PaldError::DuplicatePoints(x, y));
    }
    Ok(())
}

pub(crate) fn check_rows(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(PaldError::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    for row in points {
        if row.len() != d {
            return Err(PaldError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    Ok(d)
}

/// Validates a vector of dissimilarities from a new point to `n` reference
/// points: right length, finite, strictly positive.
pub fn check_query_vector(dt: &[f64], n: usize, tolerance: f64) -> Result<()> {
    if dt.len() != n {
        return Err(PaldError::DimensionMismatch {
            expected: n,
            got: dt.len(),
        });
    }
    for (i, &v) in dt.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(PaldError::NegativeEntry {
                row: n,
                col: i,
                value: v,
            });
        }
        if v <= tolerance {
            return Err(PaldError::DuplicatePoints(n, i));
        }
    }
    Ok(())
}
