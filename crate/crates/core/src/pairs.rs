use crate::graph::Edge;

/// Dense indexing of the unordered pairs `(i, j)`, `i < j`, of the complete
/// graph on `n` nodes, in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    n: usize,
}

impl PairIndex {
    pub const fn new(n: usize) -> Self {
        Self { n }
    }

    pub const fn nodes(&self) -> usize {
        self.n
    }

    pub const fn len(&self) -> usize {
        if self.n < 2 {
            0
        } else {
            self.n * (self.n - 1) / 2
        }
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of pair `(i, j)` with `i < j < n`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn index_of(&self, e: Edge) -> Option<usize> {
        (e.0 < e.1 && e.1 < self.n).then(|| self.index(e.0, e.1))
    }

    pub fn pairs(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j)))
    }

    /// Recovers the node count from a pair count, if it is triangular.
    pub fn from_pair_count(len: usize) -> Option<Self> {
        if len == 0 {
            return None;
        }
        let n = ((1.0 + (1.0 + 8.0 * len as f64).sqrt()) / 2.0).round() as usize;
        (n * (n - 1) / 2 == len).then_some(Self::new(n))
    }
}
