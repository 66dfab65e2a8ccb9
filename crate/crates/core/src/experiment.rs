//! Method comparison and lambda ablation over one dataset with shared seeds.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Sample, Split};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::{evaluate, format_table, MetricConfig, MetricReport};
use crate::predictor::{infer_from_features, prepare, train_prepared, Mlp, Mode, Prepared, TrainConfig, TrainOutcome};

/// Features and targets of every split, computed once.
pub struct PreparedData {
    pub train: Vec<(Prepared, Graph)>,
    pub val: Vec<(Prepared, Graph)>,
    pub test: Vec<(Prepared, Graph)>,
    pub test_ids: Vec<String>,
}

impl PreparedData {
    pub fn new(samples: &[Sample]) -> Result<Self> {
        let pick = |s: Split| samples.iter().filter(|x| x.split == s).cloned().collect::<Vec<_>>();
        let test = pick(Split::Test);
        Ok(Self {
            train: prepare(&pick(Split::Train))?,
            val: prepare(&pick(Split::Val))?,
            test_ids: test.iter().map(|s| s.id.clone()).collect(),
            test: prepare(&test)?,
        })
    }
}

/// Predicted test graphs and their report.
pub fn evaluate_model(
    mlp: &Mlp,
    test: &[(Prepared, Graph)],
    ids: &[String],
    mode: Mode,
    metrics: &MetricConfig,
) -> Result<(Vec<Graph>, MetricReport)> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("test split is empty".into()));
    }
    let preds = test
        .par_iter()
        .map(|(p, gt)| infer_from_features(mlp, gt.canvas, &gt.nodes, &p.features, mode))
        .collect::<Result<Vec<_>>>()?;
    let gts: Vec<Graph> = test.iter().map(|(_, g)| g.clone()).collect();
    let report = evaluate(&preds, &gts, ids, metrics)?;
    Ok((preds, report))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodRow {
    pub label: String,
    pub mode: Mode,
    pub lambda: f64,
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
    pub train_seconds: f64,
    pub report: MetricReport,
}

pub struct MethodRun {
    pub row: MethodRow,
    pub outcome: TrainOutcome,
}

fn run(data: &PreparedData, cfg: &TrainConfig, label: String) -> Result<MethodRun> {
    let start = Instant::now();
    let outcome = train_prepared(&data.train, &data.val, cfg)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let (_, report) = evaluate_model(&outcome.best, &data.test, &data.test_ids, cfg.mode, &cfg.metrics)?;
    let row = MethodRow {
        label,
        mode: cfg.mode,
        lambda: cfg.lambda,
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.history.len(),
        train_seconds,
        report,
    };
    Ok(MethodRun { row, outcome })
}

/// Trains and evaluates each mode with the same seed and data.
pub fn compare(data: &PreparedData, cfg: &TrainConfig, modes: &[Mode]) -> Result<Vec<MethodRun>> {
    modes.iter().map(|&mode| run(data, &TrainConfig { mode, ..cfg.clone() }, mode.name().to_string())).collect()
}

/// SFS training at each lambda.
pub fn ablation(data: &PreparedData, cfg: &TrainConfig, lambdas: &[f64]) -> Result<Vec<MethodRun>> {
    lambdas
        .iter()
        .map(|&lambda| run(data, &TrainConfig { mode: Mode::Sfs, lambda, ..cfg.clone() }, format!("sfs lambda={lambda}")))
        .collect()
}

pub fn table(rows: &[MethodRow]) -> String {
    let labelled: Vec<(&str, &MetricReport)> = rows.iter().map(|r| (r.label.as_str(), &r.report)).collect();
    format_table(&labelled)
}
