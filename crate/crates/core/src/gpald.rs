//! Generalized PaLD: probabilistic focus membership ("local relevance" `R`)
//! and probabilistic support ("support division" `Q`).
//!
//! With a single dissimilarity, `R` and `Q` are the 0/1 membership and
//! 0/½/1 support indicators and everything here reduces to [`crate::cohesion`].
//! Several dissimilarities are fused by a weighted vote.
//!
//! Tensors are dense, `n^3` values each, so `n` is capped at [`MAX_DENSE_N`].

use crate::cache::marginal_threshold;
use crate::cohesion::{threshold_from_sizes, CohesionMatrix, Tolerance};
use crate::dissimilarity::{check_query_vector, DissimilarityMatrix};
use crate::error::{PaldError, Result};
use crate::pairs::PairMatrix;

pub const MAX_DENSE_N: usize = 512;

const LAW_TOL: f64 = 1e-12;

/// Dense `n x n x n` values indexed `[x][y][z]`; the `x == y` slices are unused.
#[derive(Debug, Clone, PartialEq)]
struct Tensor {
    n: usize,
    values: Vec<f64>,
}

impl Tensor {
    fn zeros(n: usize) -> Result<Self> {
        if n > MAX_DENSE_N {
            return Err(PaldError::TensorTooLarge { n, max: MAX_DENSE_N });
        }
        Ok(Self {
            n,
            values: vec![0.0; n * n * n],
        })
    }

    #[inline]
    fn at(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.n + y) * self.n + z
    }

    #[inline]
    fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.at(x, y, z)]
    }

    fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut t = Self::zeros(n)?;
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x) {
                for z in 0..n {
                    let i = t.at(x, y, z);
                    t.values[i] = f(x, y, z);
                }
            }
        }
        Ok(t)
    }

    fn check_unit_interval(&self, name: &str) -> Result<()> {
        for x in 0..self.n {
            for y in (0..self.n).filter(|&y| y != x) {
                for z in 0..self.n {
                    let v = self.get(x, y, z);
                    if !(-LAW_TOL..=1.0 + LAW_TOL).contains(&v) {
                        return Err(PaldError::TensorLaw(format!(
                            "{name}[{x}][{y}][{z}] = {v} is outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `R[x][y][z]`: how relevant `z` is to the conflict between `x` and `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceTensor(Tensor);

/// `Q[x][y][z]`: the share of `z`'s support that goes to `x` rather than `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportTensor(Tensor);

impl RelevanceTensor {
    /// Builds from `f(x, y, z)` for distinct `x, y`, checking
    /// `R[x][y][z] = R[y][x][z]`, `R[x][y][x] = 1` and the unit range.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let t = Tensor::from_fn(n, f)?;
        t.check_unit_interval("R")?;
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x) {
                if (t.get(x, y, x) - 1.0).abs() > LAW_TOL {
                    return Err(PaldError::TensorLaw(format!("R[{x}][{y}][{x}] != 1")));
                }
                for z in 0..n {
                    if (t.get(x, y, z) - t.get(y, x, z)).abs() > LAW_TOL {
                        return Err(PaldError::TensorLaw(format!(
                            "R[{x}][{y}][{z}] != R[{y}][{x}][{z}]"
                        )));
                    }
                }
            }
        }
        Ok(Self(t))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.0.get(x, y, z)
    }
}

impl SupportTensor {
    /// Builds from `f(x, y, z)` for distinct `x, y`, checking
    /// `Q[x][y][z] + Q[y][x][z] = 1`, `Q[z][y][z] = 1` and the unit range.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let t = Tensor::from_fn(n, f)?;
        t.check_unit_interval("Q")?;
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x) {
                if (t.get(x, y, x) - 1.0).abs() > LAW_TOL {
                    return Err(PaldError::TensorLaw(format!("Q[{x}][{y}][{x}] != 1")));
                }
                for z in 0..n {
                    if (t.get(x, y, z) + t.get(y, x, z) - 1.0).abs() > LAW_TOL {
                        return Err(PaldError::TensorLaw(format!(
                            "Q[{x}][{y}][{z}] + Q[{y}][{x}][{z}] != 1"
                        )));
                    }
                }
            }
        }
        Ok(Self(t))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.0.get(x, y, z)
    }
}

fn check_weights(weights: &[f64], k: usize) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    if weights.len() != k
        || k == 0
        || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
        || (sum - 1.0).abs() > 1e-12
    {
        return Err(PaldError::BadWeights(weights.to_vec()));
    }
    Ok(())
}

/// Weighted vote of several dissimilarities over the same points.
pub fn fuse_dissimilarities(
    ds: &[DissimilarityMatrix],
    weights: &[f64],
) -> Result<(RelevanceTensor, SupportTensor)> {
    fuse_dissimilarities_with(ds, weights, Tolerance::EXACT)
}

pub fn fuse_dissimilarities_with(
    ds: &[DissimilarityMatrix],
    weights: &[f64],
    tol: Tolerance,
) -> Result<(RelevanceTensor, SupportTensor)> {
    check_weights(weights, ds.len())?;
    let n = ds[0].n();
    if let Some(bad) = ds.iter().find(|d| d.n() != n) {
        return Err(PaldError::SizeMismatch(format!(
            "dissimilarity matrices over {n} and {} points",
            bad.n()
        )));
    }
    if n > MAX_DENSE_N {
        return Err(PaldError::TensorTooLarge { n, max: MAX_DENSE_N });
    }
    for d in ds {
        d.check_separated(tol.value())?;
    }
    let dense: Vec<Vec<f64>> = ds.iter().map(DissimilarityMatrix::to_dense).collect();
    let vote = |f: fn(&[f64], usize, Tolerance, usize, usize, usize) -> f64| {
        let dense = &dense;
        move |x: usize, y: usize, z: usize| {
            dense
                .iter()
                .zip(weights)
                .map(|(d, w)| w * f(d, n, tol, x, y, z))
                .sum::<f64>()
        }
    };
    let r = RelevanceTensor::from_fn(n, vote(member))?;
    let q = SupportTensor::from_fn(n, vote(support))?;
    Ok((r, q))
}

fn member(d: &[f64], n: usize, tol: Tolerance, x: usize, y: usize, z: usize) -> f64 {
    let r = d[x * n + y];
    f64::from(u8::from(tol.within(d[z * n + x], r) || tol.within(d[z * n + y], r)))
}

fn support(d: &[f64], n: usize, tol: Tolerance, x: usize, y: usize, z: usize) -> f64 {
    tol.support(d[z * n + x], d[z * n + y])
}

/// Indicator tensors of a single dissimilarity.
pub fn indicator_tensors(d: &DissimilarityMatrix) -> Result<(RelevanceTensor, SupportTensor)> {
    fuse_dissimilarities(std::slice::from_ref(d), &[1.0])
}

/// `V[x][y] = sum_z R[x][y][z]`, the generalized focus size.
pub fn generalized_sizes(r: &RelevanceTensor) -> PairMatrix<f64> {
    let n = r.n();
    PairMatrix::from_fn(n, |x, y| (0..n).map(|z| r.get(x, y, z)).sum())
}

/// `2n(n-1) tau = sum over ordered pairs of 1 / V[x][y]`.
pub fn generalized_threshold(sizes: &PairMatrix<f64>) -> f64 {
    threshold_from_sizes(sizes.n(), sizes.as_upper().iter().copied())
}

/// `c[x][w] = 1/(n-1) sum_{y != x} R[x][y][w] Q[x][y][w] / V[x][y]`.
pub fn generalized_cohesion(r: &RelevanceTensor, q: &SupportTensor) -> Result<CohesionMatrix> {
    let n = r.n();
    if q.n() != n {
        return Err(PaldError::SizeMismatch(format!(
            "relevance over {n} points, support over {}",
            q.n()
        )));
    }
    let sizes = generalized_sizes(r);
    let mut c = vec![0.0; n * n];
    for x in 0..n {
        for y in (0..n).filter(|&y| y != x) {
            let size = sizes.get(x, y);
            for w in 0..n {
                c[x * n + w] += r.get(x, y, w) * q.get(x, y, w) / size;
            }
        }
    }
    let scale = (n - 1) as f64;
    c.iter_mut().for_each(|v| *v /= scale);
    Ok(CohesionMatrix::from_raw(n, c))
}

/// `epsilon(T, R, Q) = 1/(2n(n+1)) sum_{x != y} R_t / ((V + R_t) V)`, where
/// `R_t[x][y]` is the relevance of the test point to the pair.
pub fn generalized_correction(test_relevance: &PairMatrix<f64>, sizes: &PairMatrix<f64>) -> f64 {
    let n = sizes.n() as f64;
    let total: f64 = test_relevance
        .as_upper()
        .iter()
        .zip(sizes.as_upper())
        .map(|(&rt, &v)| 2.0 * rt / ((v + rt) * v))
        .sum();
    total / (2.0 * n * (n + 1.0))
}

/// `tau(T, R, Q) = tau(S, R, Q) (n-1)/(n+1) + c[t][t]/(n+1) - epsilon(T, R, Q)`.
pub fn generalized_marginal_threshold(
    tau_ref: f64,
    self_cohesion: f64,
    test_relevance: &PairMatrix<f64>,
    sizes: &PairMatrix<f64>,
) -> Result<f64> {
    if test_relevance.n() != sizes.n() {
        return Err(PaldError::SizeMismatch(format!(
            "test relevance over {} points, sizes over {}",
            test_relevance.n(),
            sizes.n()
        )));
    }
    if let Some(v) = test_relevance
        .as_upper()
        .iter()
        .find(|v| !(0.0..=1.0).contains(*v))
    {
        return Err(PaldError::TensorLaw(format!(
            "test relevance {v} is outside [0, 1]"
        )));
    }
    let eps = generalized_correction(test_relevance, sizes);
    Ok(marginal_threshold(tau_ref, self_cohesion, eps, sizes.n()))
}

/// Online terms for a test point under a fused vote: its self-cohesion in
/// `T` and its relevance to every reference pair.
///
/// `dts[i]` holds `d_i(t, y)` for each reference point `y`.
pub fn fused_query_terms(
    ds: &[DissimilarityMatrix],
    dts: &[Vec<f64>],
    weights: &[f64],
) -> Result<(f64, PairMatrix<f64>)> {
    check_weights(weights, ds.len())?;
    if dts.len() != ds.len() {
        return Err(PaldError::SizeMismatch(format!(
            "{} dissimilarities but {} test vectors",
            ds.len(),
            dts.len()
        )));
    }
    let n = ds[0].n();
    for (d, dt) in ds.iter().zip(dts) {
        if d.n() != n {
            return Err(PaldError::SizeMismatch("reference sizes differ".into()));
        }
        check_query_vector(dt, n, 0.0)?;
    }

    // V^T[t][y] = 1 (t itself) + sum_i w_i |{w in S : w in U^i_{t,y}}|
    let mut self_cohesion = 0.0;
    for y in 0..n {
        let mut size = 1.0;
        for ((d, dt), wgt) in ds.iter().zip(dts).zip(weights) {
            let radius = dt[y];
            let members = (0..n)
                .filter(|&w| dt[w] <= radius || d.get(w, y) <= radius)
                .count();
            size += wgt * members as f64;
        }
        self_cohesion += 1.0 / size;
    }
    self_cohesion /= n as f64;

    let relevance = PairMatrix::from_fn(n, |x, y| {
        ds.iter()
            .zip(dts)
            .zip(weights)
            .map(|((d, dt), wgt)| {
                let r = d.get(x, y);
                if dt[x] <= r || dt[y] <= r {
                    *wgt
                } else {
                    0.0
                }
            })
            .sum()
    });
    Ok((self_cohesion, relevance))
}
