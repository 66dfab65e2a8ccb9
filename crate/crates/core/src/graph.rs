//! Undirected graphs with 2D node positions on an image canvas.

use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};

/// Unordered node pair, always stored as `(min, max)`.
pub type Edge = (usize, usize);

/// Ordered edge set. Iteration order is deterministic.
pub type EdgeSet = BTreeSet<Edge>;

/// Normalises a node pair so that the smaller index comes first.
#[inline]
pub fn edge(a: usize, b: usize) -> Edge {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

/// Graph annotation: node positions in pixels, an undirected edge set and
/// the canvas the positions live on.
///
/// Node ids are their positions in `nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub canvas: (u32, u32),
    pub nodes: Vec<Point>,
    pub edges: EdgeSet,
}

impl Graph {
    /// Builds a graph and checks every invariant.
    pub fn new(canvas: (u32, u32), nodes: Vec<Point>, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut set = EdgeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {a}")));
            }
            if !set.insert(edge(a, b)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
        }
        let g = Graph { canvas, nodes, edges: set };
        g.validate()?;
        Ok(g)
    }

    pub fn empty(canvas: (u32, u32)) -> Self {
        Graph { canvas, nodes: Vec::new(), edges: EdgeSet::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.canvas.0 as f64, self.canvas.1 as f64);
        for (i, p) in self.nodes.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::InvalidGraph(format!("node {i} has a non-finite coordinate")));
            }
            if !(0.0..w).contains(&p.x) || !(0.0..h).contains(&p.y) {
                return Err(Error::InvalidGraph(format!(
                    "node {i} at ({}, {}) lies outside the {}x{} canvas",
                    p.x, p.y, self.canvas.0, self.canvas.1
                )));
            }
        }
        let n = self.nodes.len();
        for &(a, b) in &self.edges {
            if a >= b {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) is not normalised")));
            }
            if b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) references a missing node")));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn edge_length(&self, e: Edge) -> f64 {
        self.nodes[e.0].dist(self.nodes[e.1])
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|&e| self.edge_length(e)).sum()
    }

    /// Connected components counted with union-find.
    pub fn component_count(&self) -> usize {
        let mut ds = DisjointSet::new(self.nodes.len());
        for &(a, b) in &self.edges {
            ds.union(a, b);
        }
        ds.components()
    }

    /// Connected components counted by breadth-first search.
    pub fn component_count_bfs(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        count
    }

    /// Connected with exactly `n - 1` edges. Empty and single-node graphs are trees.
    pub fn is_tree(&self) -> bool {
        let n = self.nodes.len();
        if n <= 1 {
            return self.edges.is_empty();
        }
        self.edges.len() == n - 1 && self.component_count() == 1
    }

    /// Nodes whose degree is not 2: leaves, junctions and isolated nodes.
    pub fn keypoints(&self) -> Vec<usize> {
        self.degrees().iter().enumerate().filter(|(_, &d)| d != 2).map(|(i, _)| i).collect()
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            canvas: [self.canvas.0, self.canvas.1],
            nodes: self.nodes.iter().enumerate().map(|(i, p)| (i as u64, p.x, p.y)).collect(),
            edges: self.edges.iter().map(|&(a, b)| [a as u64, b as u64]).collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("graph serialises")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(text)?;
        raw.into_graph()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::file(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_string()).map_err(|e| Error::file(path, e))
    }
}

/// On-disk form: `{"canvas":[W,H],"nodes":[[id,x,y],...],"edges":[[i,j],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub canvas: [u32; 2],
    pub nodes: Vec<(u64, f64, f64)>,
    pub edges: Vec<[u64; 2]>,
}

impl GraphJson {
    /// Converts to a [`Graph`], mapping node ids to dense indices in list order.
    pub fn into_graph(self) -> Result<Graph> {
        let mut index = std::collections::HashMap::with_capacity(self.nodes.len());
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (pos, &(id, x, y)) in self.nodes.iter().enumerate() {
            if index.insert(id, pos).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate node id {id}")));
            }
            nodes.push(Point::new(x, y));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for [a, b] in self.edges {
            if a >= b {
                return Err(Error::InvalidGraph(format!("edge [{a}, {b}] must satisfy i < j")));
            }
            let ia = *index.get(&a).ok_or_else(|| Error::InvalidGraph(format!("edge references unknown node {a}")))?;
            let ib = *index.get(&b).ok_or_else(|| Error::InvalidGraph(format!("edge references unknown node {b}")))?;
            edges.push((ia, ib));
        }
        Graph::new((self.canvas[0], self.canvas[1]), nodes, edges)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn path(n: usize) -> Graph {
        let nodes = (0..n).map(|i| Point::new(10.0 + 10.0 * i as f64, 20.0)).collect();
        Graph::new((128, 128), nodes, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn graph(n: usize, edges: &[Edge]) -> Graph {
        let nodes = (0..n).map(|i| Point::new(i as f64, i as f64)).collect();
        Graph::new((64, 64), nodes, edges.iter().copied()).unwrap()
    }

    #[test]
    fn tree_predicate_examples() {
        assert!(path(3).is_tree());
        assert!(!graph(3, &[(0, 1), (1, 2), (0, 2)]).is_tree());
        assert!(!graph(4, &[(0, 1), (2, 3)]).is_tree());
        assert!(Graph::empty((8, 8)).is_tree());
        assert!(graph(1, &[]).is_tree());
    }

    #[test]
    fn keypoint_examples() {
        assert_eq!(path(5).keypoints(), vec![0, 4]);
        assert_eq!(graph(4, &[(0, 1), (0, 2), (0, 3)]).keypoints(), vec![0, 1, 2, 3]);
        assert_eq!(graph(1, &[]).keypoints(), vec![0]);
    }

    #[test]
    fn rejects_invariant_violations() {
        let nodes = vec![Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(Graph::new((8, 8), nodes.clone(), [(0, 0)]).is_err());
        assert!(Graph::new((8, 8), nodes.clone(), [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new((8, 8), nodes.clone(), [(0, 2)]).is_err());
        assert!(Graph::new((2, 8), nodes, [(0, 1)]).is_err());
    }

    #[test]
    fn json_uses_ids_not_positions() {
        let text = r#"{"canvas":[32,32],"nodes":[[7,1.5,2.0],[3,4.0,5.0]],"edges":[[3,7]]}"#;
        let g = Graph::from_json_str(text).unwrap();
        assert_eq!(g.edges, EdgeSet::from([(0, 1)]));
        let back = Graph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
        assert!(Graph::from_json_str(r#"{"canvas":[32,32],"nodes":[[0,1,1],[1,2,2]],"edges":[[1,0]]}"#).is_err());
    }
}
