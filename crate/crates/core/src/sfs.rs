//! Selective feature suppression.
//!
//! A pairwise edge head emits two logits per node pair, `[f+, f-]`. The
//! thresholded prediction is projected onto a minimum spanning tree; pairs the
//! projection adds (`E+`) get their non-edge logit replaced by `-lambda`,
//! pairs it removes (`E-`) get their edge logit replaced by `-lambda`. The
//! softmax of the suppressed logits then thresholds to exactly the tree while
//! the untouched logit keeps the backward path alive.
//!
//! The backward pass treats the projection result as a constant of the
//! forward pass and the replaced logit as disconnected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSet};
use crate::mst::{mst_project, ProjectionDiff};
use crate::pairs::PairIndex;

/// Suppression magnitude used in training unless configured otherwise.
pub const DEFAULT_LAMBDA: f64 = 10.0;

/// Suppression magnitudes swept by the ablation harness.
pub const ABLATION_LAMBDAS: [f64; 4] = [2.0, 5.0, 10.0, 100.0];

/// Lower clamp applied to each `log y` term of the cross-entropy.
pub const LOG_FLOOR: f64 = -50.0;

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfsConfig {
    pub lambda: f64,
    /// Divide both loss terms by the number of pairs. Off by default.
    #[serde(default)]
    pub normalize: bool,
}

impl Default for SfsConfig {
    fn default() -> Self {
        Self { lambda: DEFAULT_LAMBDA, normalize: false }
    }
}

impl SfsConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        let cfg = Self { lambda, normalize: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive and finite, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Residual probability `exp(-l) / (1 + exp(-l))` left on a suppressed
    /// side when the kept logit is zero.
    pub fn epsilon(&self) -> f64 {
        let e = (-self.lambda).exp();
        e / (1.0 + e)
    }
}

macro_rules! pair_table {
    ($name:ident, $what:literal) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            index: PairIndex,
            values: Vec<[f64; 2]>,
        }

        impl $name {
            pub fn index(&self) -> PairIndex {
                self.index
            }

            pub fn n(&self) -> usize {
                self.index.nodes()
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn values(&self) -> &[[f64; 2]] {
                &self.values
            }

            pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
                self.values[self.index.index(i, j)]
            }

            fn check_len(n: usize, len: usize) -> Result<PairIndex> {
                let index = PairIndex::new(n);
                if index.len() != len {
                    return Err(Error::InvalidArgument(format!(
                        concat!("{} ", $what, " entries given for {} node pairs"),
                        len,
                        index.len()
                    )));
                }
                Ok(index)
            }
        }
    };
}

pair_table!(EdgeLogits, "logit");
pair_table!(EdgeProbabilities, "probability");

impl EdgeLogits {
    /// Logits for the complete graph on `n` nodes, in [`PairIndex`] order.
    pub fn new(n: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        let index = Self::check_len(n, values.len())?;
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("edge logits"));
        }
        Ok(Self { index, values })
    }

    pub fn into_values(self) -> Vec<[f64; 2]> {
        self.values
    }

    pub fn softmax(&self) -> EdgeProbabilities {
        EdgeProbabilities { index: self.index, values: self.values.iter().map(|&f| softmax_unchecked(f)).collect() }
    }
}

impl EdgeProbabilities {
    pub fn new(n: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        let index = Self::check_len(n, values.len())?;
        for y in &values {
            if !(0.0..=1.0).contains(&y[0]) || !(0.0..=1.0).contains(&y[1]) || (y[0] + y[1] - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidArgument(format!("[{}, {}] is not a probability pair", y[0], y[1])));
            }
        }
        Ok(Self { index, values })
    }

    /// Builds probabilities from edge-existence probabilities alone.
    pub fn from_edge_probabilities(n: usize, p: &[f64]) -> Result<Self> {
        Self::new(n, p.iter().map(|&p| [p, 1.0 - p]).collect())
    }
}

/// One-hot ground truth per pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTargets {
    index: PairIndex,
    is_edge: Vec<bool>,
}

impl EdgeTargets {
    pub fn new(n: usize, is_edge: Vec<bool>) -> Result<Self> {
        let index = PairIndex::new(n);
        if index.len() != is_edge.len() {
            return Err(Error::InvalidArgument(format!("{} targets given for {} pairs", is_edge.len(), index.len())));
        }
        Ok(Self { index, is_edge })
    }

    pub fn from_edges(n: usize, edges: &EdgeSet) -> Result<Self> {
        let index = PairIndex::new(n);
        let mut is_edge = vec![false; index.len()];
        for &e in edges {
            let k = index.index_of(e).ok_or_else(|| Error::InvalidArgument(format!("edge {e:?} out of range")))?;
            is_edge[k] = true;
        }
        Ok(Self { index, is_edge })
    }

    pub fn index(&self) -> PairIndex {
        self.index
    }

    pub fn len(&self) -> usize {
        self.is_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_edge.is_empty()
    }

    pub fn is_edge(&self, k: usize) -> bool {
        self.is_edge[k]
    }

    /// `[t+, t-]` for pair `k`.
    pub fn pair(&self, k: usize) -> [f64; 2] {
        if self.is_edge[k] {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    }

    pub fn positives(&self) -> usize {
        self.is_edge.iter().filter(|&&b| b).count()
    }
}

/// Two-way softmax with max subtraction.
pub fn softmax_pair(f: [f64; 2]) -> Result<[f64; 2]> {
    if !(f[0].is_finite() && f[1].is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    Ok(softmax_unchecked(f))
}

#[inline]
fn softmax_unchecked(f: [f64; 2]) -> [f64; 2] {
    let m = f[0].max(f[1]);
    let a = (f[0] - m).exp();
    let b = (f[1] - m).exp();
    let s = a + b;
    [a / s, b / s]
}

#[inline]
fn log_softmax(f: [f64; 2]) -> [f64; 2] {
    let m = f[0].max(f[1]);
    let lse = m + ((f[0] - m).exp() + (f[1] - m).exp()).ln();
    [f[0] - lse, f[1] - lse]
}

/// `{(i, j) | y+ > y-}`.
pub fn threshold_edges(probs: &EdgeProbabilities) -> EdgeSet {
    probs.index.pairs().zip(&probs.values).filter(|(_, y)| y[0] > y[1]).map(|(e, _)| e).collect()
}

/// Which logit of a pair was overwritten with `-lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `f+` replaced: the projection removed the edge.
    Edge,
    /// `f-` replaced: the projection added the edge.
    NonEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suppressed {
    pub logits: EdgeLogits,
    pub replaced: Vec<Option<Side>>,
}

fn replaced_sides(index: PairIndex, diff: &ProjectionDiff) -> Result<Vec<Option<Side>>> {
    let mut replaced = vec![None; index.len()];
    let mut mark = |e: Edge, side: Side| -> Result<()> {
        let k = index.index_of(e).ok_or_else(|| Error::InvalidArgument(format!("pair {e:?} is not a valid node pair")))?;
        match replaced[k] {
            Some(prev) if prev != side => Err(Error::ConflictingDiff(e)),
            _ => {
                replaced[k] = Some(side);
                Ok(())
            }
        }
    };
    for &e in &diff.added {
        mark(e, Side::NonEdge)?;
    }
    for &e in &diff.removed {
        mark(e, Side::Edge)?;
    }
    Ok(replaced)
}

/// Overwrites `f-` with `-lambda` on added pairs and `f+` on removed pairs.
pub fn suppress(logits: &EdgeLogits, diff: &ProjectionDiff, cfg: &SfsConfig) -> Result<Suppressed> {
    cfg.validate()?;
    let replaced = replaced_sides(logits.index, diff)?;
    let values = logits
        .values
        .iter()
        .zip(&replaced)
        .map(|(&[fp, fm], side)| match side {
            Some(Side::NonEdge) => [fp, -cfg.lambda],
            Some(Side::Edge) => [-cfg.lambda, fm],
            None => [fp, fm],
        })
        .collect();
    Ok(Suppressed { logits: EdgeLogits { index: logits.index, values }, replaced })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfsForward {
    pub unconstrained: EdgeProbabilities,
    pub constrained: EdgeProbabilities,
    pub unconstrained_edges: EdgeSet,
    pub tree: EdgeSet,
    pub diff: ProjectionDiff,
    pub replaced: Vec<Option<Side>>,
}

/// Softmax, threshold, MST projection, suppression and softmax again.
///
/// The thresholded constrained probabilities equal `tree` whenever every
/// kept logit of a modified pair exceeds `-lambda`.
pub fn sfs_forward(logits: &EdgeLogits, cfg: &SfsConfig) -> Result<SfsForward> {
    cfg.validate()?;
    let unconstrained = logits.softmax();
    let unconstrained_edges = threshold_edges(&unconstrained);
    let (tree, diff) = mst_project(&unconstrained, &unconstrained_edges);
    let suppressed = suppress(logits, &diff, cfg)?;
    Ok(SfsForward {
        constrained: suppressed.logits.softmax(),
        unconstrained,
        unconstrained_edges,
        tree,
        diff,
        replaced: suppressed.replaced,
    })
}

/// `-(t+ log y+ + t- log y-)` with each log clamped at [`LOG_FLOOR`].
pub fn cross_entropy(y: [f64; 2], t: [f64; 2]) -> f64 {
    let term = |y: f64, t: f64| if t == 0.0 { 0.0 } else { -t * y.ln().max(LOG_FLOOR) };
    term(y[0], t[0]) + term(y[1], t[1])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeLoss {
    pub total: f64,
    pub unconstrained: f64,
    pub constrained: f64,
}

/// Sum of per-pair cross-entropies for both predictions.
pub fn edge_loss(
    constrained: &EdgeProbabilities,
    unconstrained: &EdgeProbabilities,
    targets: &EdgeTargets,
) -> Result<EdgeLoss> {
    if constrained.index != targets.index || unconstrained.index != targets.index {
        return Err(Error::InvalidArgument("loss inputs are indexed by different pair sets".into()));
    }
    let mut lu = 0.0;
    let mut lc = 0.0;
    for k in 0..targets.len() {
        let t = targets.pair(k);
        lu += cross_entropy(unconstrained.values[k], t);
        lc += cross_entropy(constrained.values[k], t);
    }
    Ok(EdgeLoss { total: lu + lc, unconstrained: lu, constrained: lc })
}

#[inline]
fn ce_from_logits(f: [f64; 2], t: [f64; 2]) -> f64 {
    let ly = log_softmax(f);
    let term = |ly: f64, t: f64| if t == 0.0 { 0.0 } else { -t * ly.max(LOG_FLOOR) };
    term(ly[0], t[0]) + term(ly[1], t[1])
}

/// Gradient of [`ce_from_logits`] w.r.t. both logits. Floored terms are constant.
#[inline]
fn ce_grad(f: [f64; 2], t: [f64; 2]) -> [f64; 2] {
    let y = softmax_unchecked(f);
    let ly = log_softmax(f);
    let mut g = [0.0; 2];
    for c in 0..2 {
        if t[c] == 0.0 || ly[c] < LOG_FLOOR {
            continue;
        }
        g[0] += t[c] * (y[0] - if c == 0 { 1.0 } else { 0.0 });
        g[1] += t[c] * (y[1] - if c == 1 { 1.0 } else { 0.0 });
    }
    g
}

#[inline]
fn modified(f: [f64; 2], side: Option<Side>, lambda: f64) -> [f64; 2] {
    match side {
        Some(Side::NonEdge) => [f[0], -lambda],
        Some(Side::Edge) => [-lambda, f[1]],
        None => f,
    }
}

fn check_shapes(logits: &EdgeLogits, targets: &EdgeTargets) -> Result<()> {
    if logits.index != targets.index {
        return Err(Error::InvalidArgument(format!(
            "logits cover {} nodes but targets cover {}",
            logits.n(),
            targets.index.nodes()
        )));
    }
    Ok(())
}

pub(crate) fn scale(cfg: &SfsConfig, pairs: usize) -> f64 {
    if cfg.normalize && pairs > 0 {
        1.0 / pairs as f64
    } else {
        1.0
    }
}

/// Edge loss computed from raw logits with the projection result held fixed.
///
/// This is the function [`sfs_backward`] differentiates; it matches
/// [`edge_loss`] on the corresponding probabilities up to rounding.
pub fn sfs_loss(logits: &EdgeLogits, diff: &ProjectionDiff, targets: &EdgeTargets, cfg: &SfsConfig) -> Result<EdgeLoss> {
    check_shapes(logits, targets)?;
    let replaced = replaced_sides(logits.index, diff)?;
    let mut lu = 0.0;
    let mut lc = 0.0;
    for (k, (&f, &side)) in logits.values.iter().zip(&replaced).enumerate() {
        let t = targets.pair(k);
        lu += ce_from_logits(f, t);
        lc += ce_from_logits(modified(f, side, cfg.lambda), t);
    }
    let s = scale(cfg, logits.len());
    Ok(EdgeLoss { total: s * (lu + lc), unconstrained: s * lu, constrained: s * lc })
}

/// Unscaled per-pair `(unconstrained, constrained)` cross-entropies from raw logits.
pub fn pair_losses(
    logits: &EdgeLogits,
    diff: &ProjectionDiff,
    targets: &EdgeTargets,
    cfg: &SfsConfig,
) -> Result<Vec<(f64, f64)>> {
    check_shapes(logits, targets)?;
    let replaced = replaced_sides(logits.index, diff)?;
    Ok(logits
        .values
        .iter()
        .zip(&replaced)
        .enumerate()
        .map(|(k, (&f, &side))| {
            let t = targets.pair(k);
            (ce_from_logits(f, t), ce_from_logits(modified(f, side, cfg.lambda), t))
        })
        .collect())
}

/// Unconstrained-only loss on raw logits.
pub fn unconstrained_loss(logits: &EdgeLogits, targets: &EdgeTargets, cfg: &SfsConfig) -> Result<f64> {
    check_shapes(logits, targets)?;
    let sum: f64 = logits.values.iter().enumerate().map(|(k, &f)| ce_from_logits(f, targets.pair(k))).sum();
    Ok(scale(cfg, logits.len()) * sum)
}

/// Gradient of the unconstrained loss term alone.
pub fn unconstrained_backward(logits: &EdgeLogits, targets: &EdgeTargets, cfg: &SfsConfig) -> Result<Vec<[f64; 2]>> {
    check_shapes(logits, targets)?;
    let s = scale(cfg, logits.len());
    Ok(logits
        .values
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let g = ce_grad(f, targets.pair(k));
            [s * g[0], s * g[1]]
        })
        .collect())
}

/// Per-pair gradient contributions of the two loss terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientParts {
    pub unconstrained: Vec<[f64; 2]>,
    pub constrained: Vec<[f64; 2]>,
}

impl GradientParts {
    pub fn total(&self) -> Vec<[f64; 2]> {
        self.unconstrained.iter().zip(&self.constrained).map(|(u, c)| [u[0] + c[0], u[1] + c[1]]).collect()
    }
}

/// Both gradient contributions w.r.t. the raw logits.
///
/// On an added pair the constrained part is `[(1 - eps) - t+, 0]`, on a
/// removed pair `[0, (1 - eps) - t-]`, elsewhere `[y+ - t+, y- - t-]`.
pub fn sfs_backward_parts(
    logits: &EdgeLogits,
    diff: &ProjectionDiff,
    targets: &EdgeTargets,
    cfg: &SfsConfig,
) -> Result<GradientParts> {
    cfg.validate()?;
    check_shapes(logits, targets)?;
    let replaced = replaced_sides(logits.index, diff)?;
    let s = scale(cfg, logits.len());
    let mut unconstrained = Vec::with_capacity(logits.len());
    let mut constrained = Vec::with_capacity(logits.len());
    for (k, (&f, &side)) in logits.values.iter().zip(&replaced).enumerate() {
        let t = targets.pair(k);
        let gu = ce_grad(f, t);
        let gm = ce_grad(modified(f, side, cfg.lambda), t);
        let gc = match side {
            Some(Side::NonEdge) => [gm[0], 0.0],
            Some(Side::Edge) => [0.0, gm[1]],
            None => gm,
        };
        unconstrained.push([s * gu[0], s * gu[1]]);
        constrained.push([s * gc[0], s * gc[1]]);
    }
    Ok(GradientParts { unconstrained, constrained })
}

/// Gradient of the combined edge loss w.r.t. the raw logits.
pub fn sfs_backward(
    logits: &EdgeLogits,
    diff: &ProjectionDiff,
    targets: &EdgeTargets,
    cfg: &SfsConfig,
) -> Result<Vec<[f64; 2]>> {
    Ok(sfs_backward_parts(logits, diff, targets, cfg)?.total())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    None,
    Added,
    Removed,
}

/// Which logit is larger in the unconstrained prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// Ties count as negative: thresholding uses a strict inequality.
    pub fn of(f: [f64; 2]) -> Self {
        if f[0] > f[1] {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

/// Row 1..=8 of the case table relating projection membership, the
/// unconstrained decision and the ground truth.
pub fn gradient_case(membership: Membership, sign: Sign, target_is_edge: bool) -> Result<u8> {
    let row = match (sign, membership, target_is_edge) {
        (Sign::Positive, Membership::None, true) => 1,
        (Sign::Positive, Membership::None, false) => 2,
        (Sign::Positive, Membership::Removed, true) => 3,
        (Sign::Positive, Membership::Removed, false) => 4,
        (Sign::Negative, Membership::None, true) => 5,
        (Sign::Negative, Membership::None, false) => 6,
        (Sign::Negative, Membership::Added, true) => 7,
        (Sign::Negative, Membership::Added, false) => 8,
        (sign, membership, _) => {
            return Err(Error::InvalidArgument(format!(
                "membership {membership:?} is impossible with an unconstrained {sign:?} decision"
            )))
        }
    };
    Ok(row)
}

pub fn membership(diff: &ProjectionDiff, e: Edge) -> Membership {
    if diff.added.contains(&e) {
        Membership::Added
    } else if diff.removed.contains(&e) {
        Membership::Removed
    } else {
        Membership::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostic {
    pub i: usize,
    pub j: usize,
    pub logits: [f64; 2],
    pub membership: Membership,
    pub target_is_edge: bool,
    pub case: u8,
}

/// Per-pair dump of logits, projection membership and case row.
pub fn diagnostics(logits: &EdgeLogits, diff: &ProjectionDiff, targets: &EdgeTargets) -> Result<Vec<PairDiagnostic>> {
    check_shapes(logits, targets)?;
    logits
        .index
        .pairs()
        .zip(&logits.values)
        .enumerate()
        .map(|(k, ((i, j), &f))| {
            let m = membership(diff, (i, j));
            Ok(PairDiagnostic {
                i,
                j,
                logits: f,
                membership: m,
                target_is_edge: targets.is_edge(k),
                case: gradient_case(m, Sign::of(f), targets.is_edge(k))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;

    fn single(f: [f64; 2]) -> EdgeLogits {
        EdgeLogits::new(2, vec![f]).unwrap()
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax_pair([0.0, 0.0]).unwrap(), [0.5, 0.5]);
        assert_eq!(softmax_pair([3.0, 3.0]).unwrap(), [0.5, 0.5]);
        let y = softmax_pair([0.0, -10.0]).unwrap();
        let eps = (-10f64).exp() / (1.0 + (-10f64).exp());
        assert_abs_diff_eq!(y[1], eps, epsilon = 1e-18);
        assert_abs_diff_eq!(y[0], 1.0 - eps, epsilon = 1e-15);
        assert!((y[1] - 4.5e-5).abs() < 0.05e-5);
        assert!(softmax_pair([f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn threshold_examples() {
        let probs = EdgeProbabilities::new(3, vec![[0.5, 0.5]; 3]).unwrap();
        assert!(threshold_edges(&probs).is_empty());
        let probs = EdgeProbabilities::new(3, vec![[0.1, 0.9], [0.9, 0.1], [0.1, 0.9]]).unwrap();
        assert_eq!(threshold_edges(&probs), EdgeSet::from([(0, 2)]));
        let y = softmax_pair([2.0, 0.0]).unwrap();
        assert!(y[0] > 0.88 && y[1] < 0.12);
        let probs = EdgeProbabilities::new(2, vec![y]).unwrap();
        assert_eq!(threshold_edges(&probs), EdgeSet::from([(0, 1)]));
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        assert!(EdgeProbabilities::new(2, vec![[0.5, 0.6]]).is_err());
        assert!(EdgeProbabilities::new(2, vec![[1.2, -0.2]]).is_err());
    }

    #[test]
    fn suppression_examples() {
        let cfg = SfsConfig::default();
        let logits = EdgeLogits::new(3, vec![[2.0, 1.5], [1.5, 2.0], [0.3, 0.4]]).unwrap();
        let diff = ProjectionDiff::new(EdgeSet::from([(0, 1)]), EdgeSet::from([(0, 2)])).unwrap();
        let out = suppress(&logits, &diff, &cfg).unwrap();
        assert_eq!(out.logits.values(), &[[2.0, -10.0], [-10.0, 2.0], [0.3, 0.4]]);
        assert_eq!(out.replaced, vec![Some(Side::NonEdge), Some(Side::Edge), None]);

        let bad = ProjectionDiff { added: EdgeSet::from([(0, 1)]), removed: EdgeSet::from([(0, 1)]) };
        assert!(matches!(suppress(&logits, &bad, &cfg), Err(Error::ConflictingDiff((0, 1)))));
        assert!(SfsConfig::new(0.0).is_err());
    }

    #[test]
    fn forward_on_a_tree_prediction_changes_nothing() {
        // 0-1 and 1-2 confidently present, 0-2 absent.
        let logits = EdgeLogits::new(3, vec![[2.0, -1.0], [-2.0, 1.0], [1.5, -1.0]]).unwrap();
        let out = sfs_forward(&logits, &SfsConfig::default()).unwrap();
        assert!(out.diff.is_empty());
        assert_eq!(out.constrained, out.unconstrained);
        assert_eq!(out.tree, EdgeSet::from([(0, 1), (1, 2)]));

        let one = EdgeLogits::new(1, vec![]).unwrap();
        let out = sfs_forward(&one, &SfsConfig::default()).unwrap();
        assert!(out.tree.is_empty() && out.constrained.is_empty());
    }

    #[test]
    fn cross_entropy_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert_abs_diff_eq!(cross_entropy([0.5, 0.5], [1.0, 0.0]), ln2, epsilon = 1e-15);
        assert_abs_diff_eq!(cross_entropy([0.5, 0.5], [0.0, 1.0]), ln2, epsilon = 1e-15);
        let eps = SfsConfig::default().epsilon();
        assert_abs_diff_eq!(cross_entropy([1.0 - eps, eps], [1.0, 0.0]), eps, epsilon = 1e-8);
        // -log(eps) = lambda + log(1 + exp(-lambda))
        assert_abs_diff_eq!(cross_entropy([eps, 1.0 - eps], [1.0, 0.0]), 10.0, epsilon = 1e-4);
        assert_eq!(cross_entropy([0.0, 1.0], [1.0, 0.0]), 50.0);
    }

    #[test]
    fn edge_loss_examples() {
        let t = EdgeTargets::new(2, vec![true]).unwrap();
        let half = EdgeProbabilities::new(2, vec![[0.5, 0.5]]).unwrap();
        let loss = edge_loss(&half, &half, &t).unwrap();
        assert_abs_diff_eq!(loss.total, 2.0 * std::f64::consts::LN_2, epsilon = 1e-15);

        // An added pair whose truth is "no edge": the constrained term pays ~lambda.
        let logits = single([0.0, 0.2]);
        let diff = ProjectionDiff::new(EdgeSet::from([(0, 1)]), EdgeSet::new()).unwrap();
        let t = EdgeTargets::new(2, vec![false]).unwrap();
        let cfg = SfsConfig::default();
        let loss = sfs_loss(&logits, &diff, &t, &cfg).unwrap();
        assert!(loss.constrained > 9.9 && loss.constrained < 10.1, "{loss:?}");
        assert!(loss.unconstrained < 1.0);

        let sup = suppress(&logits, &diff, &cfg).unwrap();
        let from_probs = edge_loss(&sup.logits.softmax(), &logits.softmax(), &t).unwrap();
        assert_abs_diff_eq!(from_probs.total, loss.total, epsilon = 1e-9);
    }

    #[test]
    fn backward_matches_the_case_table() {
        let cfg = SfsConfig::default();
        let eps = cfg.epsilon();
        let added = ProjectionDiff::new(EdgeSet::from([(0, 1)]), EdgeSet::new()).unwrap();
        let removed = ProjectionDiff::new(EdgeSet::new(), EdgeSet::from([(0, 1)])).unwrap();
        let yes = EdgeTargets::new(2, vec![true]).unwrap();
        let no = EdgeTargets::new(2, vec![false]).unwrap();

        let c7 = sfs_backward_parts(&single([-0.5, 0.5]), &added, &yes, &cfg).unwrap().constrained[0];
        assert!(c7[0].abs() <= 2.0 * eps && c7[1] == 0.0, "{c7:?}");
        let c8 = sfs_backward_parts(&single([-0.5, 0.5]), &added, &no, &cfg).unwrap().constrained[0];
        assert_abs_diff_eq!(c8[0], 1.0, epsilon = 1e-3);
        assert_eq!(c8[1], 0.0);
        let c3 = sfs_backward_parts(&single([0.5, -0.5]), &removed, &yes, &cfg).unwrap().constrained[0];
        assert_eq!(c3[0], 0.0);
        assert_abs_diff_eq!(c3[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn case_rows() {
        assert_eq!(gradient_case(Membership::None, Sign::Positive, true).unwrap(), 1);
        assert_eq!(gradient_case(Membership::Removed, Sign::Positive, false).unwrap(), 4);
        assert_eq!(gradient_case(Membership::Added, Sign::Negative, false).unwrap(), 8);
        assert!(gradient_case(Membership::Added, Sign::Positive, false).is_err());
        assert!(gradient_case(Membership::Removed, Sign::Negative, true).is_err());
    }

    #[test]
    fn diagnostics_serialise() {
        let logits = EdgeLogits::new(3, vec![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let fwd = sfs_forward(&logits, &SfsConfig::default()).unwrap();
        let t = EdgeTargets::from_edges(3, &EdgeSet::from([(0, 1), (1, 2)])).unwrap();
        let d = diagnostics(&logits, &fwd.diff, &t).unwrap();
        assert_eq!(d.iter().filter(|p| p.case == 4 || p.case == 3).count(), 1);
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"membership\":\"removed\""));
    }

    fn random_logits(n: usize, rng: &mut impl Rng) -> EdgeLogits {
        let len = PairIndex::new(n).len();
        EdgeLogits::new(n, (0..len).map(|_| [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)]).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn constrained_threshold_is_the_tree(n in 1usize..16, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let logits = random_logits(n, &mut rng);
            let out = sfs_forward(&logits, &SfsConfig::default()).unwrap();
            prop_assert_eq!(threshold_edges(&out.constrained), out.tree);
        }

        #[test]
        fn shift_invariance(n in 2usize..10, seed in any::<u64>(), shift in -3.0f64..3.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let logits = random_logits(n, &mut rng);
            let k = rng.gen_range(0..logits.len());
            let mut shifted = logits.clone().into_values();
            shifted[k] = [shifted[k][0] + shift, shifted[k][1] + shift];
            let shifted = EdgeLogits::new(n, shifted).unwrap();
            let cfg = SfsConfig::default();
            let a = sfs_forward(&logits, &cfg).unwrap();
            let b = sfs_forward(&shifted, &cfg).unwrap();
            for (p, q) in a.unconstrained.values().iter().zip(b.unconstrained.values()) {
                prop_assert!((p[0] - q[0]).abs() < 1e-12);
            }
            prop_assert_eq!(&a.diff, &b.diff);
            prop_assert_eq!(threshold_edges(&a.constrained), threshold_edges(&b.constrained));
        }
    }
}
