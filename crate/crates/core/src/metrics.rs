//! Evaluation metrics: SMD, keypoint TOPO scores and tree rate.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Point};

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost` is row-major `rows x cols` with `rows <= cols`. Returns the column
/// for each row. Shortest augmenting paths with potentials, O(rows² cols).
pub fn hungarian(cost: &[f64], rows: usize, cols: usize) -> Result<Vec<usize>> {
    if rows > cols {
        return Err(Error::InvalidArgument(format!("assignment needs rows <= cols, got {rows}x{cols}")));
    }
    if cost.len() != rows * cols {
        return Err(Error::InvalidArgument(format!("cost has {} entries, expected {}", cost.len(), rows * cols)));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("assignment cost"));
    }
    // 1-based with column 0 as the virtual source.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }
    let mut assignment = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    Ok(assignment)
}

/// `m` points spread along the edges by arc length, at offsets `(k + 1/2) L / m`.
///
/// Each edge receives a share proportional to its length and its points are
/// evenly spaced within it. A graph without edges yields its node positions,
/// cycled up to `m`; a graph without nodes yields nothing.
pub fn sample_points(g: &Graph, m: usize) -> Vec<Point> {
    if g.node_count() == 0 || m == 0 {
        return Vec::new();
    }
    let total = g.total_length();
    if g.edge_count() == 0 || total <= 0.0 {
        return (0..m).map(|k| g.nodes[k % g.node_count()]).collect();
    }
    let segs: Vec<(Point, Point, f64)> =
        g.edges.iter().map(|&(a, b)| (g.nodes[a], g.nodes[b], g.nodes[a].dist(g.nodes[b]))).collect();
    let mut out = Vec::with_capacity(m);
    let (mut idx, mut start) = (0, 0.0);
    for k in 0..m {
        let s = (k as f64 + 0.5) * total / m as f64;
        while idx + 1 < segs.len() && s > start + segs[idx].2 {
            start += segs[idx].2;
            idx += 1;
        }
        let (a, b, len) = segs[idx];
        let t = if len > 0.0 { ((s - start) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(a.lerp(b, t));
    }
    out
}

/// Mean squared distance of the optimal one-to-one matching of equal-size point sets.
pub fn matching_cost(a: &[Point], b: &[Point], scale: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("point sets differ in size: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let n = a.len();
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|p| b.iter().map(move |q| sq_dist(*p, *q) / (scale * scale)))
        .collect();
    let assign = hungarian(&cost, n, n)?;
    let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(total / n as f64)
}

fn sq_dist(a: Point, b: Point) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    dx * dx + dy * dy
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smd {
    pub value: f64,
    /// Set when one side had no nodes and `value` is the sentinel 1.0.
    pub sentinel: bool,
}

/// Street mover's distance on diagonal-normalised coordinates with `m` points per graph.
pub fn smd(pred: &Graph, gt: &Graph, m: usize) -> Result<Smd> {
    if pred.canvas != gt.canvas {
        return Err(Error::InvalidArgument(format!("canvas mismatch: {:?} vs {:?}", pred.canvas, gt.canvas)));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("smd needs at least one sample point".into()));
    }
    match (pred.node_count(), gt.node_count()) {
        (0, 0) => return Ok(Smd { value: 0.0, sentinel: false }),
        (0, _) | (_, 0) => return Ok(Smd { value: 1.0, sentinel: true }),
        _ => {}
    }
    let (w, h) = pred.canvas;
    let diag = (w as f64).hypot(h as f64);
    let value = matching_cost(&sample_points(pred, m), &sample_points(gt, m), diag)?;
    Ok(Smd { value, sentinel: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Topo {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub pred_keypoints: usize,
    pub gt_keypoints: usize,
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Sorted directions of the edges leaving `v`, in radians.
fn directions(g: &Graph, adj: &[Vec<usize>], v: usize) -> Vec<f64> {
    let p = g.nodes[v];
    let mut out: Vec<f64> = adj[v].iter().map(|&u| (g.nodes[u].y - p.y).atan2(g.nodes[u].x - p.x)).collect();
    out.sort_by(f64::total_cmp);
    out
}

fn circular_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Equal degree, and some cyclic shift pairs every direction within `tol` radians.
fn compatible(a: &[f64], b: &[f64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    n == 0 || (0..n).any(|r| (0..n).all(|k| circular_diff(a[k], b[(k + r) % n]) <= tol))
}

/// Keypoint precision, recall and F1 under spatial and local-topology matching.
pub fn topo(pred: &Graph, gt: &Graph, radius: f64, angle_tol_deg: f64) -> Result<Topo> {
    if !(radius >= 0.0) || !(angle_tol_deg >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad topo thresholds: radius {radius}, tolerance {angle_tol_deg}")));
    }
    let (pk, gk) = (pred.keypoints(), gt.keypoints());
    let (np, ng) = (pk.len(), gk.len());
    let matched = if np == 0 || ng == 0 {
        0
    } else {
        let tol = angle_tol_deg.to_radians();
        let (pa, ga) = (pred.adjacency(), gt.adjacency());
        let pd: Vec<Vec<f64>> = pk.iter().map(|&v| directions(pred, &pa, v)).collect();
        let gd: Vec<Vec<f64>> = gk.iter().map(|&v| directions(gt, &ga, v)).collect();
        // Compatible pairs cost dist/radius <= 1, others a penalty larger than
        // any sum of distances, so the optimum maximises the match count first.
        let (rows, cols, transposed) = if np <= ng { (np, ng, false) } else { (ng, np, true) };
        let penalty = rows as f64 + 1.0;
        let mut cost = vec![penalty; rows * cols];
        let mut ok = vec![false; rows * cols];
        for (i, (&p, pdir)) in pk.iter().zip(&pd).enumerate() {
            for (j, (&g, gdir)) in gk.iter().zip(&gd).enumerate() {
                let d = pred.nodes[p].dist(gt.nodes[g]);
                if d <= radius && compatible(pdir, gdir, tol) {
                    let k = if transposed { j * cols + i } else { i * cols + j };
                    cost[k] = if radius > 0.0 { d / radius } else { 0.0 };
                    ok[k] = true;
                }
            }
        }
        let assign = hungarian(&cost, rows, cols)?;
        assign.iter().enumerate().filter(|&(i, &j)| ok[i * cols + j]).count()
    };
    let ratio = |den: usize| if den == 0 { 0.0 } else { matched as f64 / den as f64 };
    let (precision, recall) = match (np, ng) {
        (0, 0) => (1.0, 1.0),
        _ => (ratio(np), ratio(ng)),
    };
    Ok(Topo { precision, recall, f1: harmonic_mean(precision, recall), matched, pred_keypoints: np, gt_keypoints: ng })
}

/// Percentage of graphs that are trees.
pub fn tree_rate(graphs: &[Graph]) -> Result<f64> {
    if graphs.is_empty() {
        return Err(Error::InvalidArgument("tree rate of an empty list".into()));
    }
    let trees = graphs.iter().filter(|g| g.is_tree()).count();
    Ok(100.0 * trees as f64 / graphs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub smd_points: usize,
    /// Keypoint matching radius in pixels.
    pub topo_radius: f64,
    pub topo_angle_tol: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { smd_points: 100, topo_radius: 13.0, topo_angle_tol: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub smd: f64,
    pub smd_sentinel: bool,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub is_tree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub smd: f64,
    pub topo_precision: f64,
    pub topo_recall: f64,
    /// Harmonic mean of the mean precision and mean recall.
    pub topo_f1: f64,
    pub tree_rate: f64,
    pub samples: Vec<SampleMetrics>,
}

/// Per-sample metrics and their means. `ids` may be empty, in which case indices are used.
pub fn evaluate(pred: &[Graph], gt: &[Graph], ids: &[String], cfg: &MetricConfig) -> Result<MetricReport> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidArgument(format!("{} predictions for {} ground-truth graphs", pred.len(), gt.len())));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    if !ids.is_empty() && ids.len() != pred.len() {
        return Err(Error::InvalidArgument(format!("{} ids for {} samples", ids.len(), pred.len())));
    }
    let samples = pred
        .iter()
        .zip(gt)
        .enumerate()
        .map(|(i, (p, g))| {
            let s = smd(p, g, cfg.smd_points)?;
            let t = topo(p, g, cfg.topo_radius, cfg.topo_angle_tol)?;
            Ok(SampleMetrics {
                id: ids.get(i).cloned().unwrap_or_else(|| i.to_string()),
                smd: s.value,
                smd_sentinel: s.sentinel,
                precision: t.precision,
                recall: t.recall,
                f1: t.f1,
                is_tree: p.is_tree(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = samples.len() as f64;
    let mean = |f: &dyn Fn(&SampleMetrics) -> f64| samples.iter().map(f).sum::<f64>() / n;
    let (precision, recall) = (mean(&|s| s.precision), mean(&|s| s.recall));
    Ok(MetricReport {
        smd: mean(&|s| s.smd),
        topo_precision: precision,
        topo_recall: recall,
        topo_f1: harmonic_mean(precision, recall),
        tree_rate: tree_rate(pred)?,
        samples,
    })
}

/// Aligned plain-text table, one row per labelled report.
pub fn format_table(rows: &[(&str, &MetricReport)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>12}  {:>6}  {:>6}  {:>6}  {:>13}", "Method", "SMD", "Prec.", "Rec.", "F1", "Tree rate [%]");
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.4e}  {:>6.3}  {:>6.3}  {:>6.3}  {:>13.1}",
            label, r.smd, r.topo_precision, r.topo_recall, r.topo_f1, r.tree_rate
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge;
    use proptest::prelude::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        permutations(n)
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    fn y_tree() -> Graph {
        // Junction at (50, 50), three arms of two 20 px segments each.
        let mut nodes = vec![Point::new(50.0, 50.0)];
        let mut edges = Vec::new();
        for dir in [(0.0, -1.0), (-0.8, 0.6), (0.8, 0.6)] {
            let base = nodes.len();
            for k in 1..=2 {
                let d = 20.0 * k as f64;
                nodes.push(Point::new(50.0 + dir.0 * d, 50.0 + dir.1 * d));
            }
            edges.push(edge(0, base));
            edges.push(edge(base, base + 1));
        }
        Graph::new((100, 100), nodes, edges).unwrap()
    }

    #[test]
    fn hungarian_small_known() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = hungarian(&cost, 3, 3).unwrap();
        assert_eq!(a, vec![1, 0, 2]);
        assert!(hungarian(&cost, 3, 2).is_err());
    }

    #[test]
    fn rectangular_assignment_picks_cheapest_columns() {
        let cost = [5.0, 1.0, 9.0, 8.0, 7.0, 2.0];
        assert_eq!(hungarian(&cost, 2, 3).unwrap(), vec![1, 2]);
    }

    #[test]
    fn smd_identical_is_zero() {
        let g = y_tree();
        let s = smd(&g, &g, 100).unwrap();
        assert!(s.value <= 1e-12 && !s.sentinel);
    }

    #[test]
    fn smd_translation_is_offset_squared() {
        let g = y_tree();
        let shift = 6.0;
        let moved = Graph::new(
            g.canvas,
            g.nodes.iter().map(|p| Point::new(p.x + shift, p.y)).collect(),
            g.edges.iter().copied(),
        )
        .unwrap();
        let m = 8;
        let diag = 100f64.hypot(100.0);
        // Exhaustive oracle on the sampled points.
        let (a, b) = (sample_points(&moved, m), sample_points(&g, m));
        let cost: Vec<f64> = a.iter().flat_map(|p| b.iter().map(move |q| sq_dist(*p, *q) / (diag * diag))).collect();
        let oracle = brute_force(&cost, m) / m as f64;
        let delta = shift / diag;
        let got = smd(&moved, &g, m).unwrap().value;
        assert!((oracle - delta * delta).abs() < 1e-15);
        assert!((got - oracle).abs() < 1e-15);
    }

    #[test]
    fn smd_sentinels() {
        let g = y_tree();
        let s = smd(&Graph::empty(g.canvas), &g, 10).unwrap();
        assert_eq!(s, Smd { value: 1.0, sentinel: true });
        let nodes_only = Graph::new(g.canvas, vec![Point::new(50.0, 50.0)], []).unwrap();
        let s = smd(&nodes_only, &g, 10).unwrap();
        assert!(!s.sentinel && s.value > 0.0);
        assert!(smd(&Graph::empty((10, 10)), &g, 10).is_err());
    }

    #[test]
    fn sample_points_are_proportional_to_length() {
        // 30 px edge and 10 px edge: 3 of 4 points land on the long one.
        let g = Graph::new(
            (100, 100),
            vec![Point::new(0.0, 0.0), Point::new(30.0, 0.0), Point::new(30.0, 10.0)],
            [edge(0, 1), edge(1, 2)],
        )
        .unwrap();
        let pts = sample_points(&g, 4);
        let xs: Vec<(f64, f64)> = pts.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(xs, vec![(5.0, 0.0), (15.0, 0.0), (25.0, 0.0), (30.0, 5.0)]);
    }

    #[test]
    fn topo_identity_and_missing_leaf() {
        let g = y_tree();
        let t = topo(&g, &g, 13.0, 30.0).unwrap();
        assert_eq!((t.precision, t.recall, t.f1), (1.0, 1.0, 1.0));

        // Drop the outer node of the first arm: that arm's leaf moves 20 px,
        // outside the radius, so 3 of the 4 keypoints still match.
        let mut nodes = g.nodes.clone();
        nodes.remove(2);
        let edges = [edge(0, 1), edge(0, 2), edge(2, 3), edge(0, 4), edge(4, 5)];
        let pred = Graph::new(g.canvas, nodes, edges).unwrap();
        let t = topo(&pred, &g, 13.0, 30.0).unwrap();
        assert_eq!(t.matched, 3);
        assert_eq!(t.recall, 0.75);
        assert_eq!(t.precision, 0.75);
    }

    #[test]
    fn topo_far_prediction_only_hurts_precision() {
        let g = y_tree();
        let mut nodes = g.nodes.clone();
        nodes.push(Point::new(95.0, 95.0));
        nodes.push(Point::new(95.0, 80.0));
        let mut edges: Vec<_> = g.edges.iter().copied().collect();
        edges.push(edge(7, 8));
        let pred = Graph::new(g.canvas, nodes, edges).unwrap();
        let t = topo(&pred, &g, 13.0, 30.0).unwrap();
        assert_eq!(t.recall, 1.0);
        assert_eq!(t.precision, 4.0 / 6.0);
    }

    #[test]
    fn topo_empty_sides() {
        let g = y_tree();
        let e = Graph::empty(g.canvas);
        let both = topo(&e, &e, 13.0, 30.0).unwrap();
        assert_eq!((both.precision, both.recall, both.f1), (1.0, 1.0, 1.0));
        let t = topo(&e, &g, 13.0, 30.0).unwrap();
        assert_eq!((t.precision, t.recall), (0.0, 0.0));
    }

    #[test]
    fn topo_rejects_rotated_junction() {
        let g = y_tree();
        let rotated = Graph::new(
            g.canvas,
            g.nodes.iter().map(|p| Point::new(100.0 - p.x, 100.0 - p.y)).collect(),
            g.edges.iter().copied(),
        )
        .unwrap();
        let t = topo(&rotated, &g, 13.0, 30.0).unwrap();
        // Junction coincides but its arms point the other way.
        assert_eq!(t.matched, 0);
    }

    #[test]
    fn tree_rate_mixes() {
        let tree = y_tree();
        let tri = Graph::new(
            (10, 10),
            vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(0.0, 5.0)],
            [edge(0, 1), edge(1, 2), edge(0, 2)],
        )
        .unwrap();
        assert_eq!(tree_rate(std::slice::from_ref(&tree)).unwrap(), 100.0);
        assert_eq!(tree_rate(&[tree, tri]).unwrap(), 50.0);
        assert!(tree_rate(&[]).is_err());
    }

    #[test]
    fn evaluate_means_match_breakdown() {
        let g = y_tree();
        let mut pred = vec![g.clone(); 10];
        pred[3] = Graph::new(g.canvas, g.nodes.clone(), g.edges.iter().copied().chain([edge(1, 3)])).unwrap();
        let gt = vec![g; 10];
        let r = evaluate(&pred, &gt, &[], &MetricConfig::default()).unwrap();
        assert_eq!(r.tree_rate, 90.0);
        let mean_smd = r.samples.iter().map(|s| s.smd).sum::<f64>() / 10.0;
        assert_eq!(r.smd, mean_smd);
        assert_eq!(r.topo_f1, harmonic_mean(r.topo_precision, r.topo_recall));
        let same = evaluate(&gt, &gt, &[], &MetricConfig::default()).unwrap();
        assert!(same.smd <= 1e-12 && same.topo_f1 == 1.0 && same.tree_rate == 100.0);
        assert!(evaluate(&pred[..2], &gt, &[], &MetricConfig::default()).is_err());
    }

    #[test]
    fn table_has_expected_columns() {
        let g = y_tree();
        let r = evaluate(std::slice::from_ref(&g), std::slice::from_ref(&g), &[], &MetricConfig::default()).unwrap();
        let t = format_table(&[("sfs", &r)]);
        let head = t.lines().next().unwrap();
        for col in ["SMD", "Prec.", "Rec.", "F1", "Tree rate [%]"] {
            assert!(head.contains(col));
        }
        assert!(t.lines().nth(1).unwrap().trim_end().ends_with("100.0"));
    }

    proptest! {
        #[test]
        fn hungarian_matches_permutations(n in 1usize..=6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cost: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let a = hungarian(&cost, n, n).unwrap();
            let got: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
            prop_assert!((got - brute_force(&cost, n)).abs() < 1e-12);
        }

        #[test]
        fn smd_symmetric_and_translation_invariant(seed in any::<u64>(), dx in -10.0f64..10.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rand_graph = || {
                let n = rng.gen_range(2..6);
                let nodes: Vec<Point> = (0..n).map(|_| Point::new(rng.gen_range(20.0..80.0), rng.gen_range(20.0..80.0))).collect();
                Graph::new((100, 100), nodes, (1..n).map(|i| edge(i - 1, i))).unwrap()
            };
            let (a, b) = (rand_graph(), rand_graph());
            let ab = smd(&a, &b, 30).unwrap().value;
            let ba = smd(&b, &a, 30).unwrap().value;
            prop_assert!((ab - ba).abs() < 1e-12);
            let shift = |g: &Graph| Graph::new(g.canvas, g.nodes.iter().map(|p| Point::new(p.x + dx, p.y)).collect(), g.edges.iter().copied()).unwrap();
            let moved = smd(&shift(&a), &shift(&b), 30).unwrap().value;
            prop_assert!((moved - ab).abs() < 1e-12);
        }

        #[test]
        fn topo_swap_swaps_precision_and_recall(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rand_tree = || {
                let n = rng.gen_range(2..10);
                let nodes: Vec<Point> = (0..n).map(|_| Point::new(rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0))).collect();
                let edges: Vec<_> = (1..n).map(|i| edge(rng.gen_range(0..i), i)).collect();
                Graph::new((64, 64), nodes, edges).unwrap()
            };
            let (a, b) = (rand_tree(), rand_tree());
            let ab = topo(&a, &b, 13.0, 30.0).unwrap();
            let ba = topo(&b, &a, 13.0, 30.0).unwrap();
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
            prop_assert!((0.0..=1.0).contains(&ab.precision) && (0.0..=1.0).contains(&ab.recall));
        }
    }
}
