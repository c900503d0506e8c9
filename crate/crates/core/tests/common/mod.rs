//! Brute-force reference implementations and random instances shared by the
//! integration tests. Nothing here calls into the optimized code paths.

#![allow(dead_code)]

use num_rational::Ratio;
use pald::{DissimilarityMatrix, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Exact = Ratio<i128>;

/// Square dissimilarities from points.
pub fn dense(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| Metric::Euclidean.distance(a, b)).collect())
        .collect()
}

/// The textbook double loop: for each ordered pair, collect the focus, then
/// hand each member's support to the closer endpoint.
pub fn oracle_cohesion(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut c = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let r = d[x][y];
            let focus: Vec<usize> = (0..n).filter(|&z| d[z][x] <= r || d[z][y] <= r).collect();
            let size = focus.len() as f64;
            for &z in &focus {
                if d[z][x] < d[z][y] {
                    c[x][z] += 1.0 / size;
                } else if d[z][x] == d[z][y] {
                    c[x][z] += 0.5 / size;
                }
            }
        }
    }
    let scale = (n - 1) as f64;
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= scale;
        }
    }
    c
}

/// Same loop in exact rational arithmetic.
pub fn oracle_cohesion_exact(d: &[Vec<f64>]) -> Vec<Vec<Exact>> {
    let n = d.len();
    let zero = Exact::from_integer(0);
    let mut c = vec![vec![zero; n]; n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let r = d[x][y];
            let focus: Vec<usize> = (0..n).filter(|&z| d[z][x] <= r || d[z][y] <= r).collect();
            let size = focus.len() as i128;
            for &z in &focus {
                if d[z][x] < d[z][y] {
                    c[x][z] += Exact::new(1, size);
                } else if d[z][x] == d[z][y] {
                    c[x][z] += Exact::new(1, 2 * size);
                }
            }
        }
    }
    let scale = Exact::from_integer((n - 1) as i128);
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= scale;
        }
    }
    c
}

pub fn oracle_threshold(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    (0..n).map(|x| c[x][x]).sum::<f64>() / (2 * n) as f64
}

pub fn oracle_focus_size(d: &[Vec<f64>], x: usize, y: usize) -> usize {
    let r = d[x][y];
    (0..d.len()).filter(|&z| d[z][x] <= r || d[z][y] <= r).count()
}

pub fn to_f64(q: &Exact) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// `|a - b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Relative error that falls back to absolute error near zero.
pub fn scaled_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cloud {
    Uniform,
    Gaussian,
}

pub fn cloud(rng: &mut impl Rng, n: usize, dim: usize, kind: Cloud) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| match kind {
                    Cloud::Uniform => rng.random_range(0.0..1.0),
                    Cloud::Gaussian => StandardNormal.sample(rng),
                })
                .collect()
        })
        .collect()
}

/// A reference set `S` with one extra test point `t`.
#[derive(Debug, Clone)]
pub struct Split {
    pub reference: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub kind: Cloud,
}

impl Split {
    pub fn all(&self) -> Vec<Vec<f64>> {
        let mut pts = self.reference.clone();
        pts.push(self.t.clone());
        pts
    }

    pub fn reference_matrix(&self) -> DissimilarityMatrix {
        DissimilarityMatrix::from_points(&self.reference, Metric::Euclidean).unwrap()
    }

    pub fn dt(&self) -> Vec<f64> {
        self.reference
            .iter()
            .map(|y| Metric::Euclidean.distance(&self.t, y))
            .collect()
    }
}

/// Instance `i` of the seeded family: `|S| + 1` in [3, 40], dimension in
/// [1, 5], alternating uniform and Gaussian clouds.
pub fn split_instance(seed: u64, i: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i));
    let n = rng.random_range(3..=40);
    let dim = rng.random_range(1..=5);
    let kind = if i % 2 == 0 { Cloud::Uniform } else { Cloud::Gaussian };
    let mut pts = cloud(&mut rng, n, dim, kind);
    let t = pts.pop().unwrap();
    Split {
        reference: pts,
        t,
        kind,
    }
}

/// Distinct integer points on a small grid, so that ties are common.
pub fn lattice(rng: &mut impl Rng, n: usize, dim: usize, side: i32) -> Vec<Vec<f64>> {
    assert!(f64::from(side).powi(dim as i32) >= n as f64, "grid too small");
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n);
    while pts.len() < n {
        let p: Vec<f64> = (0..dim).map(|_| f64::from(rng.random_range(0..side))).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}
