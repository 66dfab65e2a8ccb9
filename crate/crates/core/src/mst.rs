//! Minimum spanning tree projection of dense edge predictions.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::graph::{edge, Edge, EdgeSet};
use crate::pairs::PairIndex;
use crate::sfs::EdgeProbabilities;

/// Largest node count accepted by [`brute_force_mst`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Symmetric pairwise costs over the complete graph on `n` nodes.
///
/// Only the upper triangle is stored, so symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    index: PairIndex,
    cost: Vec<f64>,
}

impl CostMatrix {
    /// Builds a matrix from per-pair costs in [`PairIndex`] order.
    pub fn from_pairs(n: usize, cost: Vec<f64>) -> Result<Self> {
        let index = PairIndex::new(n);
        if cost.len() != index.len() {
            return Err(Error::InvalidArgument(format!(
                "{} costs given for {} node pairs",
                cost.len(),
                index.len()
            )));
        }
        if let Some(c) = cost.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidArgument(format!("cost {c} is not a finite nonnegative number")));
        }
        Ok(Self { index, cost })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let index = PairIndex::new(n);
        let cost = index.pairs().map(|(i, j)| f(i, j)).collect();
        Self::from_pairs(n, cost)
    }

    /// Uses the non-existence probability of every pair as its cost.
    pub fn from_probabilities(probs: &EdgeProbabilities) -> Self {
        let cost = probs.values().iter().map(|y| y[1].clamp(0.0, 1.0)).collect();
        Self { index: probs.index(), cost }
    }

    pub fn n(&self) -> usize {
        self.index.nodes()
    }

    /// Cost of the pair `{i, j}`; the diagonal is undefined.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = edge(i, j);
        assert!(a != b, "the diagonal of a cost matrix is undefined");
        self.cost[self.index.index(a, b)]
    }

    pub fn total(&self, edges: &EdgeSet) -> f64 {
        let mut costs: Vec<f64> = edges.iter().map(|&(a, b)| self.get(a, b)).collect();
        costs.sort_by(f64::total_cmp);
        costs.iter().sum()
    }

    fn key_cmp(&self, a: Edge, b: Edge) -> Ordering {
        self.get(a.0, a.1).total_cmp(&self.get(b.0, b.1)).then(a.cmp(&b))
    }
}

/// Kruskal's algorithm on the complete graph, scanning pairs by `(cost, i, j)`.
///
/// The result is always a single spanning tree; `n = 0` and `n = 1` give the
/// empty set.
pub fn kruskal_mst(costs: &CostMatrix) -> EdgeSet {
    let n = costs.n();
    let mut order: Vec<Edge> = costs.index.pairs().collect();
    order.sort_by(|&a, &b| costs.key_cmp(a, b));
    let mut ds = DisjointSet::new(n);
    let mut tree = EdgeSet::new();
    for (a, b) in order {
        if tree.len() + 1 >= n.max(1) {
            break;
        }
        if ds.union(a, b) {
            tree.insert((a, b));
        }
    }
    tree
}

/// Exhaustive minimum spanning tree by Prüfer-sequence enumeration.
///
/// Ties on total cost are broken by the lexicographic order of the tree's
/// sorted `(cost, i, j)` keys, which is the tree Kruskal's scan produces.
pub fn brute_force_mst(costs: &CostMatrix) -> Result<EdgeSet> {
    let n = costs.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyNodes(n));
    }
    let mut best: Option<(f64, Vec<Edge>, EdgeSet)> = None;
    for tree in spanning_trees(n) {
        let mut keys: Vec<Edge> = tree.iter().copied().collect();
        keys.sort_by(|&a, &b| costs.key_cmp(a, b));
        let total: f64 = keys.iter().map(|&(a, b)| costs.get(a, b)).sum();
        let better = match &best {
            None => true,
            Some((bt, bk, _)) => match total.total_cmp(bt) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => keys
                    .iter()
                    .zip(bk)
                    .map(|(&x, &y)| costs.key_cmp(x, y))
                    .find(|o| o.is_ne())
                    .is_some_and(Ordering::is_lt),
            },
        };
        if better {
            best = Some((total, keys, tree));
        }
    }
    Ok(best.map(|(_, _, t)| t).unwrap_or_default())
}

/// Every labelled spanning tree of the complete graph on `n` nodes
/// (`n^(n-2)` of them), decoded from Prüfer sequences.
pub fn spanning_trees(n: usize) -> Box<dyn Iterator<Item = EdgeSet>> {
    match n {
        0 | 1 => Box::new(std::iter::once(EdgeSet::new())),
        2 => Box::new(std::iter::once(EdgeSet::from([(0, 1)]))),
        _ => {
            let len = n - 2;
            let total = (n as u64).pow(len as u32);
            Box::new((0..total).map(move |mut code| {
                let mut seq = vec![0usize; len];
                for s in seq.iter_mut() {
                    *s = (code % n as u64) as usize;
                    code /= n as u64;
                }
                prufer_decode(&seq, n)
            }))
        }
    }
}

fn prufer_decode(seq: &[usize], n: usize) -> EdgeSet {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut tree = EdgeSet::new();
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        tree.insert(edge(leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    tree.insert(edge(rest[0], rest[1]));
    tree
}

/// Edges added (`E+`) and removed (`E-`) when projecting a prediction onto a tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionDiff {
    pub added: EdgeSet,
    pub removed: EdgeSet,
}

impl ProjectionDiff {
    pub fn new(added: EdgeSet, removed: EdgeSet) -> Result<Self> {
        if let Some(&e) = added.intersection(&removed).next() {
            return Err(Error::ConflictingDiff(e));
        }
        Ok(Self { added, removed })
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

/// Projects a prediction onto the minimum spanning tree that uses the
/// non-existence probability of every pair as cost.
pub fn mst_project(probs: &EdgeProbabilities, unconstrained_edges: &EdgeSet) -> (EdgeSet, ProjectionDiff) {
    let tree = kruskal_mst(&CostMatrix::from_probabilities(probs));
    let added = tree.difference(unconstrained_edges).copied().collect();
    let removed = unconstrained_edges.difference(&tree).copied().collect();
    (tree, ProjectionDiff { added, removed })
}
