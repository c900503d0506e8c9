//! Storage indexed by unordered pairs of distinct points.

/// Values attached to unordered pairs `{x, y}` with `x != y`.
///
/// Entries are kept in row-major upper-triangular order: `(0,1), (0,2), ...,
/// (0,n-1), (1,2), ...`. Access is symmetric, `get(x, y) == get(y, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix<T> {
    n: usize,
    data: Vec<T>,
}

#[inline]
pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl<T: Copy> PairMatrix<T> {
    pub fn filled(n: usize, value: T) -> Self {
        Self {
            n,
            data: vec![value; pair_count(n)],
        }
    }

    /// Wraps `data` laid out in row-major upper-triangular order.
    ///
    /// Returns `None` when the length is not `n(n-1)/2`.
    pub fn from_upper(n: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == pair_count(n)).then_some(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(pair_count(n));
        for x in 0..n {
            for y in x + 1..n {
                data.push(f(x, y));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x != y && x < self.n && y < self.n);
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        lo * self.n - lo * (lo + 1) / 2 + (hi - lo - 1)
    }

    /// # Panics
    ///
    /// Panics if `x == y` or either index is out of range.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        assert!(x != y, "pair matrices have no diagonal (x = y = {x})");
        self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        assert!(x != y, "pair matrices have no diagonal (x = y = {x})");
        let i = self.index(x, y);
        self.data[i] = value;
    }

    /// The stored values in row-major upper-triangular order.
    pub fn as_upper(&self) -> &[T] {
        &self.data
    }

    /// Iterates `(x, y, value)` with `x < y` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |x| (x + 1..n).map(move |y| (x, y)))
            .zip(self.data.iter())
            .map(|((x, y), &v)| (x, y, v))
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> PairMatrix<U> {
        PairMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
