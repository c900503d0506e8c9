//! Batch partitioned local depth: local foci, the cohesion matrix, the
//! natural threshold and the strong-link cluster network.

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;

use crate::dissimilarity::DissimilarityMatrix;
use crate::error::{PaldError, Result};
use crate::pairs::PairMatrix;

/// Slack used when comparing dissimilarities.
///
/// Two dissimilarities within the tolerance of each other are a tie (support
/// is split in half) and focus radii are widened by it. The default of zero
/// means exact floating-point comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const EXACT: Tolerance = Tolerance(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Tolerance(value))
        } else {
            Err(PaldError::InvalidTolerance(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Focus membership: `distance <= radius` up to the tolerance.
    #[inline(always)]
    pub fn within(self, distance: f64, radius: f64) -> bool {
        distance <= radius + self.0
    }

    /// Share of support a point at `to_first` / `to_second` gives the first
    /// member of a pair: 1 if strictly closer, 1/2 on a tie, 0 otherwise.
    #[inline(always)]
    pub fn support(self, to_first: f64, to_second: f64) -> f64 {
        if (to_first - to_second).abs() <= self.0 {
            0.5
        } else if to_first < to_second {
            1.0
        } else {
            0.0
        }
    }
}

/// Knobs shared by the O(n^3) passes.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub tolerance: Tolerance,
    /// Split the unordered pairs across the rayon pool. Sequential runs are
    /// bit-reproducible; parallel runs agree to summation rounding.
    pub parallel: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::EXACT,
            parallel: true,
        }
    }
}

impl Options {
    pub fn sequential() -> Self {
        Self {
            parallel: false,
            ..Self::default()
        }
    }
}

/// The points within `d(x, y)` of `x` or of `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalFocus {
    pub members: Vec<usize>,
}

impl LocalFocus {
    pub fn cardinality(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, z: usize) -> bool {
        self.members.binary_search(&z).is_ok()
    }
}

pub fn local_focus(d: &DissimilarityMatrix, x: usize, y: usize) -> Result<LocalFocus> {
    local_focus_with(d, x, y, Tolerance::EXACT)
}

pub fn local_focus_with(
    d: &DissimilarityMatrix,
    x: usize,
    y: usize,
    tolerance: Tolerance,
) -> Result<LocalFocus> {
    let n = d.n();
    for index in [x, y] {
        if index >= n {
            return Err(PaldError::IndexOutOfRange { index, n });
        }
    }
    if x == y {
        return Err(PaldError::SamePair(x));
    }
    let radius = d.get(x, y);
    let members = (0..n)
        .filter(|&z| tolerance.within(d.get(z, x), radius) || tolerance.within(d.get(z, y), radius))
        .collect();
    Ok(LocalFocus { members })
}

/// `c[x][w]`: the cohesion of `w` to `x`, a dense row-major `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CohesionMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CohesionMatrix {
    pub(crate) fn from_raw(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, w: usize) -> f64 {
        self.values[x * self.n + w]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.n..(x + 1) * self.n]
    }

    pub fn column(&self, w: usize) -> Vec<f64> {
        (0..self.n).map(|x| self.get(x, w)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|x| self.get(x, x)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &CohesionMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Exact cohesion matrix with default options (exact ties, parallel).
pub fn cohesion_matrix(d: &DissimilarityMatrix) -> CohesionMatrix {
    cohesion_matrix_with(d, &Options::default()).expect("exact tolerance cannot fail validation")
}

/// Exact cohesion matrix.
///
/// Each unordered pair is scanned once: its focus is shared by `(x, y)` and
/// `(y, x)`, and a member's support splits as `I(z,x,y) + I(z,y,x) = 1`.
pub fn cohesion_matrix_with(d: &DissimilarityMatrix, options: &Options) -> Result<CohesionMatrix> {
    d.check_separated(options.tolerance.value())?;
    let n = d.n();
    let dense = d.to_dense();
    let tol = options.tolerance;

    let accumulate_row = |mut acc: Vec<f64>, x: usize| {
        let mut scratch = Vec::with_capacity(n);
        for y in x + 1..n {
            focus_supports(&dense, n, x, y, tol, &mut scratch);
            let size = scratch.len() as f64;
            for &(z, s) in &scratch {
                acc[x * n + z] += s / size;
                acc[y * n + z] += (1.0 - s) / size;
            }
        }
        acc
    };

    let mut acc = run_rows(n, options.parallel, accumulate_row);
    let scale = (n - 1) as f64;
    acc.iter_mut().for_each(|v| *v /= scale);
    Ok(CohesionMatrix::from_raw(n, acc))
}

/// Fills `out` with `(z, I(z,x,y))` for every member `z` of the focus of
/// `(x, y)`, in increasing `z`.
#[inline]
pub(crate) fn focus_supports(
    dense: &[f64],
    n: usize,
    x: usize,
    y: usize,
    tol: Tolerance,
    out: &mut Vec<(usize, f64)>,
) {
    out.clear();
    let row_x = &dense[x * n..(x + 1) * n];
    let row_y = &dense[y * n..(y + 1) * n];
    let radius = row_x[y];
    for z in 0..n {
        let (a, b) = (row_x[z], row_y[z]);
        if tol.within(a, radius) || tol.within(b, radius) {
            out.push((z, tol.support(a, b)));
        }
    }
}

/// Runs `f` over rows `0..n`, each folding into an `n x n` accumulator, and
/// sums the accumulators.
pub(crate) fn run_rows<F>(n: usize, parallel: bool, f: F) -> Vec<f64>
where
    F: Fn(Vec<f64>, usize) -> Vec<f64> + Sync,
{
    if parallel && n > 32 {
        (0..n)
            .into_par_iter()
            .with_min_len(4)
            .fold(|| vec![0.0; n * n], &f)
            .reduce(
                || vec![0.0; n * n],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(p, q)| *p += q);
                    a
                },
            )
    } else {
        (0..n).fold(vec![0.0; n * n], f)
    }
}

/// `tau = (1 / 2n) * sum_x c[x][x]`.
pub fn natural_threshold(c: &CohesionMatrix) -> f64 {
    let trace: f64 = (0..c.n()).map(|x| c.get(x, x)).sum();
    trace / (2.0 * c.n() as f64)
}

/// `tau` from focus sizes: `2n(n-1) tau = sum over ordered pairs of 1/|U|`.
pub fn threshold_from_sizes(n: usize, sizes: impl IntoIterator<Item = f64>) -> f64 {
    let total: f64 = sizes.into_iter().map(|v| 2.0 / v).sum();
    total / (2.0 * n as f64 * (n as f64 - 1.0))
}

/// Undirected network weighted by mutual cohesion.
#[derive(Debug, Clone, PartialEq)]
pub struct CohesionNetwork {
    pub weights: PairMatrix<f64>,
    pub threshold: f64,
}

impl CohesionNetwork {
    pub fn n(&self) -> usize {
        self.weights.n()
    }

    /// Pairs `(x, y)` with `weight >= threshold`.
    pub fn strong_links(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights
            .iter()
            .filter(move |&(_, _, w)| w >= self.threshold)
    }
}

pub fn cohesion_network(c: &CohesionMatrix) -> CohesionNetwork {
    let weights = PairMatrix::from_fn(c.n(), |x, y| c.get(x, y).min(c.get(y, x)));
    CohesionNetwork {
        weights,
        threshold: natural_threshold(c),
    }
}

/// Connected components of the strong links. Points without strong links
/// are singleton clusters. Clusters are ordered by their smallest member.
pub fn strong_components(network: &CohesionNetwork) -> Vec<Vec<usize>> {
    let n = network.n();
    let mut uf = UnionFind::<usize>::new(n);
    for (x, y, _) in network.strong_links() {
        uf.union(x, y);
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for p in 0..n {
        let root = uf.find(p);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(p);
    }
    clusters
}
