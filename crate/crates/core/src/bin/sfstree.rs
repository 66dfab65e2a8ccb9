use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sfstree::config::{Overrides, RunConfig};
use sfstree::dataset::{generate_dataset, Dataset, Profile, Split};
use sfstree::experiment::{self, evaluate_model, MethodRow, PreparedData};
use sfstree::graph::{Graph, GraphJson};
use sfstree::metrics::{evaluate, format_table, MetricReport};
use sfstree::mst::mst_project;
use sfstree::plot::render_svg;
use sfstree::predictor::{prepare, train_prepared, write_history, Checkpoint, Mode};
use sfstree::sfs::{threshold_edges, EdgeProbabilities};
use sfstree::{Error, Result};

/// Exit status when some requested outputs could not be produced.
const PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "sfstree", version, about = "Tree-constrained edge prediction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, value_parser = parse_profile)]
    profile: Option<Profile>,
    /// Output location; defaults to a directory under $SFSTREE_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, global = true, env = "SFSTREE_OUT", default_value = "runs", hide_env_values = true)]
    out_root: PathBuf,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_profile(s: &str) -> std::result::Result<Profile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the edge predictor on a dataset.
    Train {
        /// Dataset directory or manifest.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint, the ground truth itself, or all methods.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, required_unless_present_any = ["self_check", "compare", "ablation"])]
        checkpoint: Option<PathBuf>,
        /// Score the ground truth against itself.
        #[arg(long, conflicts_with_all = ["compare", "ablation", "checkpoint"])]
        self_check: bool,
        /// Train and evaluate unconstrained, ttc and sfs with shared seeds.
        #[arg(long, conflicts_with = "ablation")]
        compare: bool,
        /// Train sfs at each ablation lambda.
        #[arg(long)]
        ablation: bool,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, value_parser = parse_split, default_value = "test")]
        split: Split,
        #[command(flatten)]
        common: Common,
    },
    /// Project a graph or an edge-probability matrix onto a spanning tree.
    Project {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Render SVG overlays of predictions on ground truth.
    Plot {
        #[arg(long)]
        data: PathBuf,
        /// Directory of predicted graphs named `<id>.json`.
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long, value_parser = parse_split, default_value = "test")]
        split: Split,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn run_config(&self, count: Option<usize>, epochs: Option<usize>) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        base.resolve(&Overrides {
            seed: self.seed,
            profile: self.profile,
            mode: self.mode,
            lambda: self.lambda,
            count,
            epochs,
        })
    }

    fn out_dir(&self, default_name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| self.out_root.join(default_name))
    }

    /// Creates `dir`, refusing a non-empty one unless forced.
    fn prepare_dir(&self, dir: &Path) -> Result<()> {
        if let Ok(mut entries) = fs::read_dir(dir) {
            if entries.next().is_some() && !self.force {
                return Err(Error::InvalidArgument(format!(
                    "output directory {} is not empty (use --force)",
                    dir.display()
                )));
            }
        }
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::file(path, e))
}

fn cmd_gen(count: Option<usize>, common: &Common) -> Result<u8> {
    let cfg = common.run_config(count, None)?;
    let out = common.out_dir(&format!("data-{}-{}", cfg.profile, cfg.seed));
    common.prepare_dir(&out)?;
    let geom = cfg.geom();
    let manifest =
        generate_dataset(&out, cfg.profile.name(), &geom, &cfg.rules()?, cfg.gen.count, cfg.seed, cfg.splits())?;
    cfg.write_snapshot(&out)?;
    let (min, max, mean) = manifest.node_stats();
    let split_count = |s: Split| manifest.samples.iter().filter(|e| e.split == s).count();
    println!("manifest: {}", out.join("manifest.json").display());
    println!(
        "samples: {} (train {}, val {}, test {}), nodes min {min} / mean {mean:.1} / max {max}, cap {}",
        manifest.count,
        split_count(Split::Train),
        split_count(Split::Val),
        split_count(Split::Test),
        geom.node_cap
    );
    Ok(0)
}

#[derive(Serialize)]
struct TrainSummary {
    best_epoch: Option<usize>,
    epochs_run: usize,
    train_samples: usize,
    val_samples: usize,
}

fn cmd_train(data: &Path, epochs: Option<usize>, common: &Common) -> Result<u8> {
    let cfg = common.run_config(None, epochs)?;
    let ds = Dataset::open(data)?;
    let train = ds.load_split(Split::Train)?;
    let val = ds.load_split(Split::Val)?;
    if train.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no training samples", data.display())));
    }
    let out = common.out_dir(&format!("train-{}-{}", cfg.train.mode, cfg.seed));
    common.prepare_dir(&out)?;
    cfg.write_snapshot(&out)?;
    let outcome = train_prepared(&prepare(&train)?, &prepare(&val)?, &cfg.train)?;
    Checkpoint::new(&outcome.best, &cfg.train, outcome.best_epoch).save(&out.join("checkpoint.json"))?;
    write_history(&outcome.history, &out.join("history.csv"))?;
    let summary = TrainSummary {
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.history.len(),
        train_samples: train.len(),
        val_samples: val.len(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    if let Some(last) = outcome.history.last() {
        println!("epoch {}: loss {:.4}, val F1 {:.4}", last.epoch, last.loss, last.val_f1);
    }
    let best = outcome.best_epoch.map_or("initial weights".to_string(), |e| format!("best epoch {e}"));
    println!("checkpoint: {} ({best})", out.join("checkpoint.json").display());
    Ok(0)
}

fn write_predictions(dir: &Path, ids: &[String], graphs: &[Graph]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    for (id, g) in ids.iter().zip(graphs) {
        g.save(&dir.join(format!("{id}.json")))?;
    }
    Ok(())
}

fn write_report(out: &Path, rows: &[(&str, &MetricReport)]) -> Result<()> {
    let table = format_table(rows);
    fs::write(out.join("report.txt"), &table).map_err(|e| Error::file(out.join("report.txt"), e))?;
    print!("{table}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    data: &Path,
    checkpoint: Option<&Path>,
    self_check: bool,
    compare: bool,
    ablation: bool,
    lambdas: Option<Vec<f64>>,
    epochs: Option<usize>,
    split: Split,
    common: &Common,
) -> Result<u8> {
    let mut cfg = common.run_config(None, epochs)?;
    if let Some(l) = lambdas {
        cfg.ablation_lambdas = l;
    }
    let ds = Dataset::open(data)?;
    let name = if self_check {
        "eval-self-check".to_string()
    } else if compare {
        format!("compare-{}", cfg.seed)
    } else if ablation {
        format!("ablation-{}", cfg.seed)
    } else {
        format!("eval-{}", cfg.train.mode)
    };
    let out = common.out_dir(&name);
    common.prepare_dir(&out)?;
    cfg.write_snapshot(&out)?;

    if self_check {
        let samples = ds.load_split(split)?;
        let gts: Vec<Graph> = samples.iter().map(|s| s.graph.clone()).collect();
        let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
        let report = evaluate(&gts, &gts, &ids, &cfg.metrics)?;
        write_json(&out.join("report.json"), &report)?;
        write_report(&out, &[("ground truth", &report)])?;
        return Ok(0);
    }

    if compare || ablation {
        let all: Vec<_> = [Split::Train, Split::Val, Split::Test]
            .into_iter()
            .map(|s| ds.load_split(s))
            .collect::<Result<Vec<_>>>()?
            .concat();
        let data = PreparedData::new(&all)?;
        let runs = if compare {
            experiment::compare(&data, &cfg.train, &Mode::ALL)?
        } else {
            experiment::ablation(&data, &cfg.train, &cfg.ablation_lambdas)?
        };
        let rows: Vec<MethodRow> = runs.iter().map(|r| r.row.clone()).collect();
        for run in &runs {
            let dir = out.join(run.row.label.replace([' ', '='], "_"));
            fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
            let train = sfstree::predictor::TrainConfig { mode: run.row.mode, lambda: run.row.lambda, ..cfg.train.clone() };
            Checkpoint::new(&run.outcome.best, &train, run.outcome.best_epoch).save(&dir.join("checkpoint.json"))?;
            write_history(&run.outcome.history, &dir.join("history.csv"))?;
        }
        write_json(&out.join("report.json"), &rows)?;
        let table = experiment::table(&rows);
        fs::write(out.join("report.txt"), &table).map_err(|e| Error::file(out.join("report.txt"), e))?;
        print!("{table}");
        return Ok(0);
    }

    let path = checkpoint.expect("clap requires a checkpoint here");
    let mlp = Checkpoint::load(path)?.mlp().map_err(|e| Error::file(path, e))?;
    let samples = ds.load_split(split)?;
    let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
    let (preds, report) = evaluate_model(&mlp, &prepare(&samples)?, &ids, cfg.train.mode, &cfg.metrics)?;
    write_predictions(&out.join("predictions"), &ids, &preds)?;
    write_json(&out.join("report.json"), &report)?;
    write_report(&out, &[(cfg.train.mode.name(), &report)])?;
    Ok(0)
}

/// Edge-probability matrix input for `project`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbabilityInput {
    /// Symmetric `n x n` matrix of edge-existence probabilities; the diagonal is ignored.
    probabilities: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TreeOutput {
    nodes: usize,
    edges: Vec<[usize; 2]>,
    added: Vec<[usize; 2]>,
    removed: Vec<[usize; 2]>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::file(path, format!("malformed input: {e}")))
}

/// Graph input gets probabilities from geometry: listed edges get a
/// non-edge probability below 1/2 that grows with length, other pairs above 1/2.
fn graph_probabilities(g: &Graph) -> Result<EdgeProbabilities> {
    let (w, h) = g.canvas;
    let diag = (w as f64).hypot(h as f64);
    let n = g.node_count();
    let p: Vec<f64> = sfstree::PairIndex::new(n)
        .pairs()
        .map(|(i, j)| {
            let d = (g.nodes[i].dist(g.nodes[j]) / diag).min(1.0);
            if g.edges.contains(&(i, j)) {
                1.0 - 0.49 * d
            } else {
                0.5 - 0.5 * d
            }
        })
        .collect();
    EdgeProbabilities::from_edge_probabilities(n, &p)
}

fn cmd_project(input: &Path, common: &Common) -> Result<u8> {
    let text = fs::read_to_string(input).map_err(|e| Error::file(input, e))?;
    let value: serde_json::Value = parse_json(&text, input)?;
    let is_graph = value.get("nodes").is_some();
    let (probs, graph) = if is_graph {
        let g = parse_json::<GraphJson>(&text, input)?.into_graph().map_err(|e| Error::file(input, e))?;
        (graph_probabilities(&g)?, Some(g))
    } else {
        let m: ProbabilityInput = parse_json(&text, input)?;
        let n = m.probabilities.len();
        if m.probabilities.iter().any(|row| row.len() != n) {
            return Err(Error::file(input, "probability matrix is not square"));
        }
        let p: Vec<f64> = sfstree::PairIndex::new(n).pairs().map(|(i, j)| m.probabilities[i][j]).collect();
        (EdgeProbabilities::from_edge_probabilities(n, &p).map_err(|e| Error::file(input, e))?, None)
    };
    let (tree, diff) = mst_project(&probs, &threshold_edges(&probs));
    let out = common.out.clone().unwrap_or_else(|| {
        let stem = input.file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned());
        common.out_root.join(format!("{stem}.tree.json"))
    });
    if out.exists() && !common.force {
        return Err(Error::InvalidArgument(format!("{} exists (use --force)", out.display())));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::file(parent, e))?;
    }
    match graph {
        Some(g) => {
            let t = Graph::new(g.canvas, g.nodes, tree.iter().copied())?;
            debug_assert!(t.is_tree());
            t.save(&out)?;
        }
        None => {
            let pairs = |s: &sfstree::EdgeSet| s.iter().map(|&(a, b)| [a, b]).collect();
            let t = TreeOutput {
                nodes: probs.n(),
                edges: pairs(&tree),
                added: pairs(&diff.added),
                removed: pairs(&diff.removed),
            };
            write_json(&out, &t)?;
        }
    }
    println!("tree: {} ({} edges), |E+| = {}, |E-| = {}", out.display(), tree.len(), diff.added.len(), diff.removed.len());
    Ok(0)
}

fn cmd_plot(data: &Path, pred: Option<&Path>, split: Split, common: &Common) -> Result<u8> {
    let ds = Dataset::open(data)?;
    let out = common.out_dir("plots");
    common.prepare_dir(&out)?;
    let mut written = 0;
    let mut skipped = 0;
    for entry in ds.manifest.samples.iter().filter(|e| e.split == split) {
        let gt = match Graph::load(&ds.root.join(&entry.graph)) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", entry.id);
                skipped += 1;
                continue;
            }
        };
        let predicted = match pred {
            Some(dir) => match Graph::load(&dir.join(format!("{}.json", entry.id))) {
                Ok(g) => Some(g),
                Err(e) => {
                    eprintln!("warning: skipping {}: {e}", entry.id);
                    skipped += 1;
                    continue;
                }
            },
            None => None,
        };
        let background = sfstree::image::load(&ds.root.join(&entry.image)).ok();
        let svg = render_svg(&gt, predicted.as_ref(), background.as_ref())?;
        let path = out.join(format!("{}.svg", entry.id));
        fs::write(&path, svg).map_err(|e| Error::file(&path, e))?;
        written += 1;
    }
    println!("plots: {} written, {skipped} skipped, in {}", written, out.display());
    Ok(if skipped > 0 { PARTIAL } else { 0 })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen { count, common } => cmd_gen(count, &common),
        Command::Train { data, epochs, common } => cmd_train(&data, epochs, &common),
        Command::Eval { data, checkpoint, self_check, compare, ablation, lambdas, epochs, split, common } => cmd_eval(
            &data,
            checkpoint.as_deref(),
            self_check,
            compare,
            ablation,
            lambdas,
            epochs,
            split,
            &common,
        ),
        Command::Project { input, common } => cmd_project(&input, &common),
        Command::Plot { data, pred, split, common } => cmd_plot(&data, pred.as_deref(), split, &common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
