//! Annotation clean-up: uniform resampling of tree graphs, greedy assembly
//! of branch polylines into a tree, and skeleton masks to graphs.

use std::collections::HashSet;

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::graph::{edge, Edge, Graph, Point};
use crate::image::{is_ink, GrayImage};

/// Root annotations are resampled every 8 px.
pub const ROOT_INTERVAL: f64 = 8.0;
/// Generalized datasets are resampled every 13 px.
pub const GENERALIZED_INTERVAL: f64 = 13.0;

/// Maximal runs of degree-2 nodes between keypoints, as node index paths
/// that start and end at keypoints.
pub fn chains(g: &Graph) -> Vec<Vec<usize>> {
    let deg = g.degrees();
    let adj = g.adjacency();
    let mut used: HashSet<Edge> = HashSet::new();
    let mut out = Vec::new();
    for k in (0..g.node_count()).filter(|&v| deg[v] != 2) {
        let mut nbrs = adj[k].clone();
        nbrs.sort_unstable();
        for v in nbrs {
            if !used.insert(edge(k, v)) {
                continue;
            }
            let mut chain = vec![k];
            let (mut prev, mut cur) = (k, v);
            while deg[cur] == 2 {
                chain.push(cur);
                let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                used.insert(edge(cur, next));
                prev = cur;
                cur = next;
            }
            chain.push(cur);
            out.push(chain);
        }
    }
    out
}

/// Re-places the nodes of every keypoint-to-keypoint chain at equal arc
/// length, using `max(1, round(L / interval))` segments per chain.
pub fn resample_graph(g: &Graph, interval: f64) -> Result<Graph> {
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Error::InvalidArgument(format!("resampling interval must be positive, got {interval}")));
    }
    if !g.is_tree() {
        return Err(Error::NotATree(format!(
            "{} nodes, {} edges, {} components",
            g.node_count(),
            g.edge_count(),
            g.component_count()
        )));
    }
    let keypoints = g.keypoints();
    let mut remap = vec![usize::MAX; g.node_count()];
    let mut nodes = Vec::with_capacity(g.node_count());
    for &k in &keypoints {
        remap[k] = nodes.len();
        nodes.push(g.nodes[k]);
    }
    let mut edges = Vec::new();
    for chain in chains(g) {
        let pts: Vec<Point> = chain.iter().map(|&v| g.nodes[v]).collect();
        let mut cum = vec![0.0];
        for w in pts.windows(2) {
            cum.push(cum.last().unwrap() + w[0].dist(w[1]));
        }
        let length = *cum.last().unwrap();
        let segments = ((length / interval).round() as usize).max(1);
        let mut prev = remap[chain[0]];
        let mut seg = 0;
        for k in 1..segments {
            let s = length * k as f64 / segments as f64;
            while seg + 1 < cum.len() - 1 && cum[seg + 1] < s {
                seg += 1;
            }
            let span = cum[seg + 1] - cum[seg];
            let t = if span > 0.0 { ((s - cum[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
            let id = nodes.len();
            nodes.push(pts[seg].lerp(pts[seg + 1], t));
            edges.push((prev, id));
            prev = id;
        }
        edges.push((prev, remap[*chain.last().unwrap()]));
    }
    Graph::new(g.canvas, nodes, edges)
}

fn arc_length(pts: &[Point]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Joins branch polylines into one tree.
///
/// The longest branch seeds the tree. Each round attaches the remaining
/// branch whose nearer endpoint is closest (point-to-segment) to the tree,
/// linking that endpoint to the nearest existing tree node. An endpoint
/// that coincides with its tree node is merged into it.
pub fn greedy_assemble(branches: &[Vec<Point>], canvas: (u32, u32)) -> Result<Graph> {
    if branches.is_empty() {
        return Err(Error::InvalidArgument("no branches to assemble".into()));
    }
    let mut cleaned = Vec::with_capacity(branches.len());
    for (i, b) in branches.iter().enumerate() {
        if b.len() < 2 {
            return Err(Error::InvalidArgument(format!("branch {i} has fewer than two points")));
        }
        let mut pts: Vec<Point> = Vec::with_capacity(b.len());
        for &p in b {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        cleaned.push(pts);
    }

    let seed = (0..cleaned.len())
        .fold(0, |best, i| if arc_length(&cleaned[i]) > arc_length(&cleaned[best]) { i } else { best });
    let mut nodes: Vec<Point> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    push_chain(&mut nodes, &mut edges, None, &cleaned[seed]);

    let mut pending: Vec<usize> = (0..cleaned.len()).filter(|&i| i != seed).collect();
    while !pending.is_empty() {
        let mut best: Option<(f64, usize, bool)> = None;
        for (slot, &b) in pending.iter().enumerate() {
            let pts = &cleaned[b];
            for reversed in [false, true] {
                let end = if reversed { *pts.last().unwrap() } else { pts[0] };
                let d = distance_to_tree(end, &nodes, &edges);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, slot, reversed));
                }
            }
        }
        let (_, slot, reversed) = best.expect("pending is nonempty");
        let b = pending.remove(slot);
        let mut pts = cleaned[b].clone();
        if reversed {
            pts.reverse();
        }
        let anchor = (0..nodes.len())
            .fold(0, |best, i| if pts[0].dist(nodes[i]) < pts[0].dist(nodes[best]) { i } else { best });
        if pts[0].dist(nodes[anchor]) == 0.0 {
            push_chain(&mut nodes, &mut edges, Some(anchor), &pts[1..]);
        } else {
            push_chain(&mut nodes, &mut edges, Some(anchor), &pts);
        }
    }
    Graph::new(canvas, nodes, edges)
}

fn distance_to_tree(p: Point, nodes: &[Point], edges: &[Edge]) -> f64 {
    if edges.is_empty() {
        return nodes.iter().map(|&q| p.dist(q)).fold(f64::INFINITY, f64::min);
    }
    edges.iter().map(|&(a, b)| point_segment_distance(p, nodes[a], nodes[b])).fold(f64::INFINITY, f64::min)
}

fn push_chain(nodes: &mut Vec<Point>, edges: &mut Vec<Edge>, mut prev: Option<usize>, pts: &[Point]) {
    for &p in pts {
        let id = nodes.len();
        nodes.push(p);
        if let Some(q) = prev {
            edges.push((q, id));
        }
        prev = Some(id);
    }
}

/// Converts a one-pixel-wide skeleton into a resampled tree graph.
///
/// Ink pixels become nodes joined under 8-connectivity, except that a
/// diagonal link is dropped when both pixels already share an ink
/// 4-neighbour. Cycles and disconnected pieces are rejected.
pub fn skeleton_mask_to_graph(mask: &GrayImage, interval: f64) -> Result<Graph> {
    let (w, h) = mask.dimensions();
    let mut id = vec![usize::MAX; (w as usize) * (h as usize)];
    let mut nodes = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if is_ink(mask, x, y) {
                id[(y * w + x) as usize] = nodes.len();
                nodes.push(Point::new(x as f64, y as f64));
            }
        }
    }
    let ink = |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && is_ink(mask, x as u32, y as u32);
    let node_at = |x: i64, y: i64| id[(y as u32 * w + x as u32) as usize];

    let mut ds = DisjointSet::new(nodes.len());
    let mut edges = Vec::new();
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !ink(x, y) {
                continue;
            }
            // Forward neighbours only, so every link is visited once.
            for (dx, dy) in [(1, 0), (0, 1), (1, 1), (-1, 1)] {
                let (nx, ny) = (x + dx, y + dy);
                if !ink(nx, ny) {
                    continue;
                }
                if dx != 0 && dy != 0 && (ink(x + dx, y) || ink(x, y + dy)) {
                    continue;
                }
                let (a, b) = (node_at(x, y), node_at(nx, ny));
                if !ds.union(a, b) {
                    return Err(Error::SkeletonCycle { x: nx as u32, y: ny as u32 });
                }
                edges.push((a, b));
            }
        }
    }
    if ds.components() > 1 {
        return Err(Error::NotATree(format!("skeleton has {} disconnected pieces", ds.components())));
    }
    let pixels = Graph::new((w, h), nodes, edges)?;
    resample_graph(&pixels, interval)
}
