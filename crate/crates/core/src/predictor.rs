//! Pairwise MLP edge predictor and its trainer.
//!
//! Every node pair gets an 8-dimensional geometric/coverage feature vector;
//! a 8-32-32-2 ReLU network maps it to the logit pair `[f+, f-]`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::graph::{Graph, Point};
use crate::image::{self, GrayImage};
use crate::metrics::{evaluate, MetricConfig};
use crate::mst::{mst_project, ProjectionDiff};
use crate::pairs::PairIndex;
use crate::sfs::{self, threshold_edges, EdgeLogits, EdgeLoss, EdgeTargets, SfsConfig};

pub const FEATURES: usize = 8;
pub const HIDDEN: usize = 32;
pub const OUTPUTS: usize = 2;
pub const COVERAGE_SAMPLES: usize = 16;
pub const ARCH: [usize; 4] = [FEATURES, HIDDEN, HIDDEN, OUTPUTS];

pub type Features = [f64; FEATURES];

fn in_canvas(p: Point, w: u32, h: u32) -> bool {
    p.x.is_finite() && p.y.is_finite() && (0.0..w as f64).contains(&p.x) && (0.0..h as f64).contains(&p.y)
}

/// Feature vector of the pair `(i, j)`; coverage is sampled at `k / 17`, `k = 1..=16`.
pub fn pair_features(img: &GrayImage, nodes: &[Point], i: usize, j: usize) -> Result<Features> {
    if i == j {
        return Err(Error::InvalidArgument(format!("pair features need distinct nodes, got ({i}, {i})")));
    }
    let (w, h) = img.dimensions();
    let (a, b) = match (nodes.get(i), nodes.get(j)) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidArgument(format!("pair ({i}, {j}) out of range for {} nodes", nodes.len()))),
    };
    for (k, p) in [(i, a), (j, b)] {
        if !in_canvas(p, w, h) {
            return Err(Error::InvalidArgument(format!("node {k} at ({}, {}) lies outside the {w}x{h} image", p.x, p.y)));
        }
    }
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let dist = a.dist(b);
    let diag = (w as f64).hypot(h as f64);
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for k in 1..=COVERAGE_SAMPLES {
        let p = a.lerp(b, k as f64 / (COVERAGE_SAMPLES + 1) as f64);
        let c = image::bilinear(img, p.x, p.y);
        sum += c;
        min = min.min(c);
    }
    let cos = if dist > 0.0 { (dx / dist).abs() } else { 0.0 };
    Ok([dx / w as f64, dy / h as f64, dist / diag, sum / COVERAGE_SAMPLES as f64, min, cos, 0.0, 1.0])
}

/// Features of every pair in [`PairIndex`] order.
pub fn all_pair_features(img: &GrayImage, nodes: &[Point]) -> Result<Vec<Features>> {
    PairIndex::new(nodes.len()).pairs().map(|(i, j)| pair_features(img, nodes, i, j)).collect()
}

/// Weights of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layer {
    offset: usize,
    inputs: usize,
    outputs: usize,
}

impl Layer {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    fn biases(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.inputs * self.outputs;
        start..start + self.outputs
    }
}

const fn layers() -> [Layer; 3] {
    let l1 = Layer { offset: 0, inputs: FEATURES, outputs: HIDDEN };
    let l2 = Layer { offset: FEATURES * HIDDEN + HIDDEN, inputs: HIDDEN, outputs: HIDDEN };
    let l3 = Layer { offset: l2.offset + HIDDEN * HIDDEN + HIDDEN, inputs: HIDDEN, outputs: OUTPUTS };
    [l1, l2, l3]
}

pub const PARAM_COUNT: usize = FEATURES * HIDDEN + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN * OUTPUTS + OUTPUTS;

/// Row-major `out x in` weights followed by biases, layer after layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub params: Vec<f64>,
}

/// Hidden activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    h1: Vec<[f64; HIDDEN]>,
    h2: Vec<[f64; HIDDEN]>,
}

fn dense<const I: usize, const O: usize>(p: &[f64], layer: Layer, x: &[f64; I], relu: bool) -> [f64; O] {
    let w = &p[layer.weights()];
    let b = &p[layer.biases()];
    let mut out = [0.0; O];
    for (o, out) in out.iter_mut().enumerate() {
        let row = &w[o * I..(o + 1) * I];
        let mut acc = b[o];
        for k in 0..I {
            acc += row[k] * x[k];
        }
        *out = if relu { acc.max(0.0) } else { acc };
    }
    out
}

/// Accumulates `dW += g x^T`, `db += g` and returns `W^T g`.
fn dense_back<const I: usize, const O: usize>(
    p: &[f64],
    grad: &mut [f64],
    layer: Layer,
    x: &[f64; I],
    g: &[f64; O],
) -> [f64; I] {
    let w = &p[layer.weights()];
    let mut dx = [0.0; I];
    {
        let gw = &mut grad[layer.weights()];
        for o in 0..O {
            if g[o] == 0.0 {
                continue;
            }
            let row = &w[o * I..(o + 1) * I];
            let grow = &mut gw[o * I..(o + 1) * I];
            for k in 0..I {
                grow[k] += g[o] * x[k];
                dx[k] += row[k] * g[o];
            }
        }
    }
    for (gb, go) in grad[layer.biases()].iter_mut().zip(g) {
        *gb += go;
    }
    dx
}

impl Mlp {
    /// He-normal weights, zero biases.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; PARAM_COUNT];
        for layer in layers() {
            let normal = Normal::new(0.0, (2.0 / layer.inputs as f64).sqrt()).expect("positive std");
            for w in &mut params[layer.weights()] {
                *w = normal.sample(&mut rng);
            }
        }
        Self { params }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != PARAM_COUNT {
            return Err(Error::InvalidArgument(format!("expected {PARAM_COUNT} parameters, got {}", params.len())));
        }
        Ok(Self { params })
    }

    pub fn zero_output_layer(&mut self) {
        let out = layers()[2];
        self.params[out.weights()].fill(0.0);
        self.params[out.biases()].fill(0.0);
    }

    fn check(&self) -> Result<()> {
        if self.params.len() != PARAM_COUNT {
            return Err(Error::InvalidArgument(format!("expected {PARAM_COUNT} parameters, got {}", self.params.len())));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("predictor parameters"));
        }
        Ok(())
    }

    pub fn forward(&self, features: &[Features]) -> Result<Vec<[f64; 2]>> {
        Ok(self.forward_cached(features)?.0)
    }

    pub fn forward_cached(&self, features: &[Features]) -> Result<(Vec<[f64; 2]>, Activations)> {
        self.check()?;
        let [l1, l2, l3] = layers();
        let p = &self.params;
        let mut acts = Activations { h1: Vec::with_capacity(features.len()), h2: Vec::with_capacity(features.len()) };
        let mut out = Vec::with_capacity(features.len());
        for x in features {
            let h1: [f64; HIDDEN] = dense(p, l1, x, true);
            let h2: [f64; HIDDEN] = dense(p, l2, &h1, true);
            out.push(dense(p, l3, &h2, false));
            acts.h1.push(h1);
            acts.h2.push(h2);
        }
        if out.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predictor logits"));
        }
        Ok((out, acts))
    }

    /// Parameter gradient of `sum_k upstream[k] . logits[k]`.
    pub fn backward(&self, features: &[Features], upstream: &[[f64; 2]]) -> Result<Vec<f64>> {
        let (_, acts) = self.forward_cached(features)?;
        let mut grad = vec![0.0; PARAM_COUNT];
        self.backward_into(features, &acts, upstream, &mut grad)?;
        Ok(grad)
    }

    pub fn backward_into(
        &self,
        features: &[Features],
        acts: &Activations,
        upstream: &[[f64; 2]],
        grad: &mut [f64],
    ) -> Result<()> {
        if upstream.len() != features.len() || acts.h1.len() != features.len() || grad.len() != PARAM_COUNT {
            return Err(Error::InvalidArgument(format!(
                "backward shapes: {} features, {} upstream rows, {} cached, {} gradient slots",
                features.len(),
                upstream.len(),
                acts.h1.len(),
                grad.len()
            )));
        }
        let [l1, l2, l3] = layers();
        let p = &self.params;
        for (k, x) in features.iter().enumerate() {
            let (h1, h2) = (&acts.h1[k], &acts.h2[k]);
            let mut g2 = dense_back(p, grad, l3, h2, &upstream[k]);
            for (g, h) in g2.iter_mut().zip(h2) {
                if *h <= 0.0 {
                    *g = 0.0;
                }
            }
            let mut g1 = dense_back(p, grad, l2, h1, &g2);
            for (g, h) in g1.iter_mut().zip(h1) {
                if *h <= 0.0 {
                    *g = 0.0;
                }
            }
            dense_back::<FEATURES, HIDDEN>(p, grad, l1, x, &g1);
        }
        Ok(())
    }

    pub fn logits(&self, n: usize, features: &[Features]) -> Result<EdgeLogits> {
        EdgeLogits::new(n, self.forward(features)?)
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { lr, beta1, beta2, eps, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "unconstrained")]
    Unconstrained,
    /// Trained as unconstrained; projected onto a tree only at inference.
    #[serde(rename = "ttc", alias = "test_time_constraint")]
    TestTimeConstraint,
    #[serde(rename = "sfs")]
    Sfs,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Unconstrained, Mode::TestTimeConstraint, Mode::Sfs];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Unconstrained => "unconstrained",
            Mode::TestTimeConstraint => "ttc",
            Mode::Sfs => "sfs",
        }
    }

    pub fn constrained_inference(self) -> bool {
        self != Mode::Unconstrained
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconstrained" => Ok(Mode::Unconstrained),
            "ttc" | "test_time_constraint" => Ok(Mode::TestTimeConstraint),
            "sfs" => Ok(Mode::Sfs),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?} (unconstrained|ttc|sfs)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Set from the run-level seed when loaded from a config file.
    #[serde(skip)]
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Graphs per optimiser step.
    pub batch_size: usize,
    pub lambda: f64,
    pub mode: Mode,
    /// Epochs without a validation F1 improvement before stopping.
    pub patience: usize,
    /// Weight positive pairs by `#neg / #pos` of each sample.
    pub positive_weight: bool,
    /// Divide per-sample losses by the pair count.
    pub normalize: bool,
    /// Validation metric settings; filled from the run-level metric section.
    #[serde(skip)]
    pub metrics: MetricConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 50,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 8,
            lambda: sfs::DEFAULT_LAMBDA,
            mode: Mode::Sfs,
            patience: 30,
            positive_weight: false,
            normalize: false,
            metrics: MetricConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn sfs_config(&self) -> SfsConfig {
        SfsConfig { lambda: self.lambda, normalize: self.normalize }
    }

    pub fn validate(&self) -> Result<()> {
        self.sfs_config().validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidArgument("invalid optimiser constants".into()));
        }
        Ok(())
    }
}

/// Node positions, pair features and targets of one training graph.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub n: usize,
    pub features: Vec<Features>,
    pub targets: EdgeTargets,
}

impl Prepared {
    pub fn new(img: &GrayImage, gt: &Graph) -> Result<Self> {
        Ok(Self {
            n: gt.node_count(),
            features: all_pair_features(img, &gt.nodes)?,
            targets: EdgeTargets::from_edges(gt.node_count(), &gt.edges)?,
        })
    }
}

fn pair_weights(targets: &EdgeTargets, enabled: bool) -> Option<Vec<f64>> {
    let pos = targets.positives();
    let neg = targets.len() - pos;
    if !enabled || pos == 0 || neg == 0 {
        return None;
    }
    let w = neg as f64 / pos as f64;
    Some((0..targets.len()).map(|k| if targets.is_edge(k) { w } else { 1.0 }).collect())
}

/// Loss of one sample with the projection held at `diff` (`None` trains without the constrained term).
pub fn sample_loss(
    mlp: &Mlp,
    sample: &Prepared,
    diff: Option<&ProjectionDiff>,
    cfg: &TrainConfig,
) -> Result<EdgeLoss> {
    let logits = mlp.logits(sample.n, &sample.features)?;
    let sc = cfg.sfs_config();
    let empty = ProjectionDiff::default();
    let per_pair = sfs::pair_losses(&logits, diff.unwrap_or(&empty), &sample.targets, &sc)?;
    let weights = pair_weights(&sample.targets, cfg.positive_weight);
    let s = sfs::scale(&sc, logits.len());
    let (mut lu, mut lc) = (0.0, 0.0);
    for (k, (u, c)) in per_pair.into_iter().enumerate() {
        let w = weights.as_ref().map_or(1.0, |w| w[k]);
        lu += w * u;
        lc += w * c;
    }
    let (lu, lc) = (s * lu, if diff.is_some() { s * lc } else { 0.0 });
    Ok(EdgeLoss { total: lu + lc, unconstrained: lu, constrained: lc })
}

/// Loss and parameter gradient of one sample in the given training mode.
///
/// Returns the projection diff used, which is empty outside SFS training.
pub fn sample_gradient(mlp: &Mlp, sample: &Prepared, cfg: &TrainConfig) -> Result<(EdgeLoss, Vec<f64>, ProjectionDiff)> {
    let (raw, acts) = mlp.forward_cached(&sample.features)?;
    let logits = EdgeLogits::new(sample.n, raw)?;
    let sc = cfg.sfs_config();
    let (diff, mut upstream) = if cfg.mode == Mode::Sfs {
        let fw = sfs::sfs_forward(&logits, &sc)?;
        let g = sfs::sfs_backward(&logits, &fw.diff, &sample.targets, &sc)?;
        (Some(fw.diff), g)
    } else {
        (None, sfs::unconstrained_backward(&logits, &sample.targets, &sc)?)
    };
    if let Some(w) = pair_weights(&sample.targets, cfg.positive_weight) {
        for (g, w) in upstream.iter_mut().zip(w) {
            g[0] *= w;
            g[1] *= w;
        }
    }
    let loss = sample_loss(mlp, sample, diff.as_ref(), cfg)?;
    let mut grad = vec![0.0; PARAM_COUNT];
    mlp.backward_into(&sample.features, &acts, &upstream, &mut grad)?;
    Ok((loss, grad, diff.unwrap_or_default()))
}

/// Predicted graph over the given nodes.
///
/// Constrained modes return the MST tree of the unconstrained probabilities;
/// the unconstrained mode returns the thresholded edges.
pub fn infer(mlp: &Mlp, img: &GrayImage, nodes: &[Point], mode: Mode) -> Result<Graph> {
    let canvas = img.dimensions();
    if nodes.len() < 2 {
        return Graph::new(canvas, nodes.to_vec(), []);
    }
    let features = all_pair_features(img, nodes)?;
    infer_from_features(mlp, canvas, nodes, &features, mode)
}

pub fn infer_from_features(
    mlp: &Mlp,
    canvas: (u32, u32),
    nodes: &[Point],
    features: &[Features],
    mode: Mode,
) -> Result<Graph> {
    if nodes.len() < 2 {
        return Graph::new(canvas, nodes.to_vec(), []);
    }
    let probs = mlp.logits(nodes.len(), features)?.softmax();
    let edges = threshold_edges(&probs);
    let edges = if mode.constrained_inference() { mst_project(&probs, &edges).0 } else { edges };
    Graph::new(canvas, nodes.to_vec(), edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub unconstrained_loss: f64,
    pub constrained_loss: f64,
    pub val_f1: f64,
    pub val_smd: f64,
    pub val_tree_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation F1.
    pub best: Mlp,
    pub best_epoch: Option<usize>,
    pub last: Mlp,
    pub history: Vec<EpochRecord>,
}

/// Writes the history as CSV.
pub fn write_history(history: &[EpochRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::file(path, e))?;
    for r in history {
        w.serialize(r).map_err(|e| Error::file(path, e))?;
    }
    if history.is_empty() {
        w.write_record(["epoch", "loss", "unconstrained_loss", "constrained_loss", "val_f1", "val_smd", "val_tree_rate"])
            .map_err(|e| Error::file(path, e))?;
    }
    w.flush().map_err(|e| Error::file(path, e))?;
    Ok(())
}

fn validation_scores(mlp: &Mlp, val: &[(Prepared, Graph)], cfg: &TrainConfig) -> Result<(f64, f64, f64)> {
    if val.is_empty() {
        return Ok((f64::NAN, f64::NAN, f64::NAN));
    }
    let preds = val
        .par_iter()
        .map(|(p, gt)| infer_from_features(mlp, gt.canvas, &gt.nodes, &p.features, cfg.mode))
        .collect::<Result<Vec<_>>>()?;
    let gts: Vec<Graph> = val.iter().map(|(_, g)| g.clone()).collect();
    let r = evaluate(&preds, &gts, &[], &cfg.metrics)?;
    Ok((r.topo_f1, r.smd, r.tree_rate))
}

pub fn prepare(samples: &[Sample]) -> Result<Vec<(Prepared, Graph)>> {
    samples.par_iter().map(|s| Ok((Prepared::new(&s.image, &s.graph)?, s.graph.clone()))).collect()
}

/// Trains from scratch; see [`train_prepared`].
pub fn train(train: &[Sample], val: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let train = prepare(train)?;
    let val = prepare(val)?;
    train_prepared(&train, &val, cfg)
}

/// Mini-batch Adam over graphs, reshuffled every epoch.
///
/// Per-sample gradients are computed in parallel and summed in sample order,
/// so histories are bit-identical for a fixed seed. The best parameters are
/// chosen by validation TOPO F1 (first epoch wins ties); without a
/// validation set the final parameters are kept.
pub fn train_prepared(train: &[(Prepared, Graph)], val: &[(Prepared, Graph)], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut mlp = Mlp::new(cfg.seed);
    let mut adam = Adam::new(PARAM_COUNT, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464c_4521);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = mlp.clone();
    let mut best_epoch = None;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut grad = vec![0.0; PARAM_COUNT];
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = EdgeLoss::default();
        for batch in order.chunks(cfg.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| sample_gradient(&mlp, &train[i].0, cfg))
                .collect::<Result<Vec<_>>>()?;
            grad.fill(0.0);
            let inv = 1.0 / batch.len() as f64;
            for (loss, g, _) in &results {
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += inv * b;
                }
                total.total += loss.total;
                total.unconstrained += loss.unconstrained;
                total.constrained += loss.constrained;
            }
            adam.step(&mut mlp.params, &grad);
            mlp.check()?;
        }
        let n = train.len() as f64;
        let (val_f1, val_smd, val_tree_rate) = validation_scores(&mlp, val, cfg)?;
        history.push(EpochRecord {
            epoch,
            loss: total.total / n,
            unconstrained_loss: total.unconstrained / n,
            constrained_loss: total.constrained / n,
            val_f1,
            val_smd,
            val_tree_rate,
        });
        if val.is_empty() {
            best = mlp.clone();
            best_epoch = Some(epoch);
        } else if val_f1 > best_f1 {
            best_f1 = val_f1;
            best = mlp.clone();
            best_epoch = Some(epoch);
        } else if best_epoch.is_some_and(|b| epoch - b >= cfg.patience) {
            break;
        }
    }
    Ok(TrainOutcome { best, best_epoch, last: mlp, history })
}

const CHECKPOINT_FORMAT: &str = "sfstree-mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub arch: Vec<usize>,
    pub seed: u64,
    pub mode: Mode,
    pub lambda: f64,
    pub epoch: Option<usize>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(mlp: &Mlp, cfg: &TrainConfig, epoch: Option<usize>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            arch: ARCH.to_vec(),
            seed: cfg.seed,
            mode: cfg.mode,
            lambda: cfg.lambda,
            epoch,
            params: mlp.params.clone(),
        }
    }

    pub fn mlp(&self) -> Result<Mlp> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint {} v{}", self.format, self.version)));
        }
        if self.arch != ARCH {
            return Err(Error::Checkpoint(format!("architecture {:?} does not match {:?}", self.arch, ARCH)));
        }
        let mlp = Mlp::from_params(self.params.clone()).map_err(|e| Error::Checkpoint(e.to_string()))?;
        mlp.check().map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(mlp)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::file(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::file(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge;
    use rand::Rng;

    fn random_features(rng: &mut ChaCha8Rng, count: usize) -> Vec<Features> {
        (0..count)
            .map(|_| {
                let mut f = [0.0; FEATURES];
                for v in &mut f[..6] {
                    *v = rng.gen_range(-1.0..1.0);
                }
                f[7] = 1.0;
                f
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        diff / norm(a).max(norm(b)).max(1e-12)
    }

    #[test]
    fn coverage_on_blank_full_and_drawn() {
        let nodes = [Point::new(2.0, 3.0), Point::new(20.0, 3.0)];
        let blank = image::blank(32, 32);
        let f = pair_features(&blank, &nodes, 0, 1).unwrap();
        assert_eq!((f[3], f[4]), (0.0, 0.0));
        let full = GrayImage::from_pixel(32, 32, ::image::Luma([255]));
        let f = pair_features(&full, &nodes, 0, 1).unwrap();
        assert_eq!((f[3], f[4]), (1.0, 1.0));
        let mut drawn = image::blank(32, 32);
        image::draw_line(&mut drawn, (2.0, 3.0), (20.0, 3.0), 1, image::INK);
        let f = pair_features(&drawn, &nodes, 0, 1).unwrap();
        assert_eq!((f[3], f[4]), (1.0, 1.0));
        assert_eq!(f[5], 1.0);
        assert_eq!(f[7], 1.0);
        assert!(f.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn feature_errors() {
        let img = image::blank(16, 16);
        let nodes = [Point::new(1.0, 1.0), Point::new(20.0, 1.0)];
        assert!(pair_features(&img, &nodes, 0, 0).is_err());
        assert!(pair_features(&img, &nodes, 0, 1).is_err());
        assert!(pair_features(&img, &nodes, 0, 5).is_err());
    }

    #[test]
    fn zero_output_layer_gives_even_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut mlp = Mlp::new(3);
        mlp.zero_output_layer();
        let f = random_features(&mut rng, 6);
        let logits = mlp.logits(4, &f).unwrap();
        assert!(logits.values().iter().all(|&v| v == [0.0, 0.0]));
        assert!(logits.softmax().values().iter().all(|&p| p == [0.5, 0.5]));
    }

    #[test]
    fn forward_is_deterministic_and_rejects_nan() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mlp = Mlp::new(4);
        let f = random_features(&mut rng, 1);
        let out = mlp.forward(&[f[0], f[0]]).unwrap();
        assert_eq!(out[0], out[1]);
        let mut bad = mlp.clone();
        bad.params[5] = f64::NAN;
        assert!(bad.forward(&f).is_err());
    }

    #[test]
    fn output_bias_and_weight_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mlp = Mlp::new(6);
        let f = random_features(&mut rng, 1);
        let zero = mlp.backward(&f, &[[0.0, 0.0]]).unwrap();
        assert!(zero.iter().all(|&g| g == 0.0));
        let up = [[0.7, -0.3]];
        let g = mlp.backward(&f, &up).unwrap();
        let (_, acts) = mlp.forward_cached(&f).unwrap();
        let out = layers()[2];
        assert_eq!(g[out.biases()], [0.7, -0.3]);
        // dL/dW3[0][k] = h2[k] * upstream[0].
        for (w, h) in g[out.weights()][..HIDDEN].iter().zip(&acts.h2[0]) {
            assert_eq!(*w, h * 0.7);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..5 {
            let n = rng.gen_range(3..7);
            let mlp = Mlp::new(trial);
            let feats = random_features(&mut rng, PairIndex::new(n).len());
            let targets =
                EdgeTargets::from_edges(n, &(1..n).map(|i| edge(rng.gen_range(0..i), i)).collect()).unwrap();
            let cfg = TrainConfig { mode: Mode::Sfs, ..TrainConfig::default() };
            let (_, grad, diff) = sample_gradient(&mlp, &Prepared { n, features: feats.clone(), targets: targets.clone() }, &cfg).unwrap();
            let sample = Prepared { n, features: feats, targets };
            let h = 1e-6;
            let mut fd = vec![0.0; PARAM_COUNT];
            for (p, slot) in fd.iter_mut().enumerate() {
                let mut plus = mlp.clone();
                plus.params[p] += h;
                let mut minus = mlp.clone();
                minus.params[p] -= h;
                let lp = sample_loss(&plus, &sample, Some(&diff), &cfg).unwrap().total;
                let lm = sample_loss(&minus, &sample, Some(&diff), &cfg).unwrap().total;
                *slot = (lp - lm) / (2.0 * h);
            }
            let err = rel_err(&grad, &fd);
            assert!(err < 1e-5, "trial {trial}: relative error {err}");
        }
    }

    #[test]
    fn positive_weight_scales_gradient_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 5;
        let mlp = Mlp::new(1);
        let sample = Prepared {
            n,
            features: random_features(&mut rng, PairIndex::new(n).len()),
            targets: EdgeTargets::from_edges(n, &(1..n).map(|i| edge(i - 1, i)).collect()).unwrap(),
        };
        let cfg = TrainConfig { mode: Mode::Unconstrained, positive_weight: true, ..TrainConfig::default() };
        let (_, grad, _) = sample_gradient(&mlp, &sample, &cfg).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..PARAM_COUNT)
            .map(|p| {
                let mut a = mlp.clone();
                a.params[p] += h;
                let mut b = mlp.clone();
                b.params[p] -= h;
                (sample_loss(&a, &sample, None, &cfg).unwrap().total - sample_loss(&b, &sample, None, &cfg).unwrap().total)
                    / (2.0 * h)
            })
            .collect();
        assert!(rel_err(&grad, &fd) < 1e-5);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut adam = Adam::new(2, 0.1, 0.9, 0.999, 1e-8);
        let mut p = [1.0, 1.0];
        adam.step(&mut p, &[2.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] - 1.1).abs() < 1e-6);
    }

    fn tiny_samples(count: usize) -> Vec<Sample> {
        use crate::dataset::{generate_samples, Profile, SplitFractions};
        use crate::lsystem::RuleSet;
        generate_samples(&Profile::Mini.geom(), &RuleSet::default(), count, 11, SplitFractions { val: 0.0, test: 0.0 })
            .unwrap()
    }

    #[test]
    fn zero_epochs_keep_initialisation_and_runs_repeat() {
        let samples = tiny_samples(6);
        let cfg = TrainConfig { epochs: 0, seed: 3, ..TrainConfig::default() };
        let out = train(&samples, &[], &cfg).unwrap();
        assert_eq!(out.best, Mlp::new(3));
        assert!(out.history.is_empty());

        let cfg = TrainConfig { epochs: 2, seed: 3, batch_size: 2, ..TrainConfig::default() };
        let a = train(&samples, &samples[..2], &cfg).unwrap();
        let b = train(&samples, &samples[..2], &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.last, b.last);
        assert!(train(&[], &[], &cfg).is_err());
    }

    #[test]
    fn constrained_inference_is_a_tree_and_modes_agree() {
        let samples = tiny_samples(4);
        let mlp = Mlp::new(8);
        for s in &samples {
            let a = infer(&mlp, &s.image, &s.graph.nodes, Mode::Sfs).unwrap();
            let b = infer(&mlp, &s.image, &s.graph.nodes, Mode::TestTimeConstraint).unwrap();
            assert!(a.is_tree());
            assert_eq!(a, b);
        }
        let one = infer(&mlp, &samples[0].image, &samples[0].graph.nodes[..1], Mode::Sfs).unwrap();
        assert!(one.is_tree() && one.edge_count() == 0);
    }

    #[test]
    fn checkpoint_round_trip_and_arch_check() {
        let mlp = Mlp::new(12);
        let cp = Checkpoint::new(&mlp, &TrainConfig::default(), Some(4));
        let text = serde_json::to_string(&cp).unwrap();
        let back = Checkpoint::from_json_str(&text).unwrap();
        assert_eq!(back.mlp().unwrap(), mlp);
        let mut wrong = back.clone();
        wrong.arch = vec![8, 64, 64, 2];
        assert!(matches!(wrong.mlp(), Err(Error::Checkpoint(_))));
        assert!(Checkpoint::from_json_str("{\"format\": 3}").is_err());
    }

    #[test]
    fn mode_names() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert_eq!("test_time_constraint".parse::<Mode>().unwrap(), Mode::TestTimeConstraint);
        assert!("tree".parse::<Mode>().is_err());
    }
}
