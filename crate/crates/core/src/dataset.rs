//! Synthetic dataset factory and on-disk dataset layout.
//!
//! A dataset directory holds `manifest.json`, `images/<id>.png` and
//! `graphs/<id>.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::image::{self, GrayImage};
use crate::lsystem::{interpret, rasterize, GeomConfig, RuleSet};
use crate::preprocess::{resample_graph, GENERALIZED_INTERVAL};

/// Attempts per sample before giving up on the node cap.
pub const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 512x512, stroke 1, at most 100 nodes.
    Standard,
    /// 256x256, resampled every 13 px, at most 384 nodes.
    Generalized,
    /// Generalized canvas with thick strokes and a fixed joint angle.
    Thickened,
    /// 128x128, at most 30 nodes. Desk-scale experiments.
    Mini,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Standard, Profile::Generalized, Profile::Thickened, Profile::Mini];

    pub fn geom(self) -> GeomConfig {
        let base = GeomConfig::default();
        match self {
            Profile::Standard => base,
            Profile::Generalized => GeomConfig {
                canvas: [256, 256],
                node_cap: 384,
                resample_interval: Some(GENERALIZED_INTERVAL),
                ..base
            },
            Profile::Thickened => GeomConfig {
                canvas: [256, 256],
                node_cap: 384,
                stroke: 3,
                angle_deg: [25.0, 25.0],
                resample_interval: Some(GENERALIZED_INTERVAL),
                ..base
            },
            Profile::Mini => GeomConfig { canvas: [128, 128], node_cap: 30, ..base },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Standard => "standard",
            Profile::Generalized => "generalized",
            Profile::Thickened => "thickened",
            Profile::Mini => "mini",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown profile {s:?} (standard|generalized|thickened|mini)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split {s:?}"))),
        }
    }
}

/// Image plus ground-truth graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub seed: u64,
    pub split: Split,
    pub image: GrayImage,
    pub graph: Graph,
}

/// SplitMix64 finaliser; derives independent per-sample seeds from a master seed.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One tree drawing attempt; fails with [`Error::NodeCapExceeded`] when too large.
pub fn draw_tree(geom: &GeomConfig, rules: &RuleSet, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let iterations = rng.gen_range(1..=geom.max_iterations.max(1));
    let seq = rules.grow(iterations, &mut rng);
    let mut g = interpret(&seq, geom, &mut rng)?;
    if let Some(interval) = geom.resample_interval {
        g = resample_graph(&g, interval)?;
    }
    if g.node_count() > geom.node_cap {
        return Err(Error::NodeCapExceeded { nodes: g.node_count(), cap: geom.node_cap });
    }
    Ok(g)
}

/// Draws a tree under the node cap, retrying with derived seeds.
///
/// Returns the seed of the successful attempt with the graph.
pub fn draw_tree_with_retries(geom: &GeomConfig, rules: &RuleSet, seed: u64) -> Result<(u64, Graph)> {
    for attempt in 0..MAX_ATTEMPTS {
        let s = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
        match draw_tree(geom, rules, s) {
            Ok(g) => return Ok((s, g)),
            Err(Error::NodeCapExceeded { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted { seed, attempts: MAX_ATTEMPTS })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { val: 0.1, test: 0.1 }
    }
}

impl SplitFractions {
    /// Contiguous assignment: train first, then validation, then test.
    pub fn assign(&self, index: usize, count: usize) -> Split {
        let test = (count as f64 * self.test).round() as usize;
        let val = (count as f64 * self.val).round() as usize;
        let train = count.saturating_sub(test + val);
        if index < train {
            Split::Train
        } else if index < train + val {
            Split::Val
        } else {
            Split::Test
        }
    }

    /// Exact split sizes.
    pub fn from_counts(train: usize, val: usize, test: usize) -> (usize, Self) {
        let count = train + val + test;
        let c = count.max(1) as f64;
        (count, Self { val: val as f64 / c, test: test as f64 / c })
    }
}

/// Generates samples in memory. Sample `i` uses `derive_seed(seed, i)`.
pub fn generate_samples(
    geom: &GeomConfig,
    rules: &RuleSet,
    count: usize,
    seed: u64,
    splits: SplitFractions,
) -> Result<Vec<Sample>> {
    geom.validate()?;
    let work = |i: usize| -> Result<Sample> {
        let (used, graph) = draw_tree_with_retries(geom, rules, derive_seed(seed, i as u64))?;
        let image = rasterize(&graph, geom)?;
        Ok(Sample { id: format!("{i:06}"), seed: used, split: splits.assign(i, count), image, graph })
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(count.max(1));
    if threads <= 1 {
        return (0..count).map(work).collect();
    }
    // Each worker takes a strided share; results are put back in index order.
    let mut slots: Vec<Option<Result<Sample>>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let work = &work;
                scope.spawn(move || (t..count).step_by(threads).map(|i| (i, work(i))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("generator thread panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every index generated")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image: String,
    pub graph: String,
    pub split: Split,
    pub seed: u64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub profile: String,
    pub seed: u64,
    pub count: usize,
    pub geom: GeomConfig,
    pub samples: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::file(path, format!("corrupt manifest: {e}")))
    }

    pub fn node_stats(&self) -> (usize, usize, f64) {
        let nodes = self.samples.iter().map(|s| s.nodes);
        let min = nodes.clone().min().unwrap_or(0);
        let max = nodes.clone().max().unwrap_or(0);
        let mean = if self.samples.is_empty() { 0.0 } else { nodes.sum::<usize>() as f64 / self.samples.len() as f64 };
        (min, max, mean)
    }
}

/// Writes a generated dataset to `out` and returns its manifest.
pub fn write_dataset(
    out: &Path,
    profile_name: &str,
    geom: &GeomConfig,
    seed: u64,
    samples: &[Sample],
) -> Result<Manifest> {
    fs::create_dir_all(out.join("images")).map_err(|e| Error::file(out, e))?;
    fs::create_dir_all(out.join("graphs")).map_err(|e| Error::file(out, e))?;
    let mut entries = Vec::with_capacity(samples.len());
    for s in samples {
        let image = format!("images/{}.png", s.id);
        let graph = format!("graphs/{}.json", s.id);
        image::save(&s.image, &out.join(&image))?;
        s.graph.save(&out.join(&graph))?;
        entries.push(ManifestEntry { id: s.id.clone(), image, graph, split: s.split, seed: s.seed, nodes: s.graph.node_count() });
    }
    let manifest =
        Manifest { profile: profile_name.to_string(), seed, count: samples.len(), geom: geom.clone(), samples: entries };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::file(&path, e))?;
    Ok(manifest)
}

/// Generates and writes a dataset in one go.
pub fn generate_dataset(
    out: &Path,
    profile_name: &str,
    geom: &GeomConfig,
    rules: &RuleSet,
    count: usize,
    seed: u64,
    splits: SplitFractions,
) -> Result<Manifest> {
    if count == 0 {
        return Err(Error::InvalidArgument("dataset count must be at least 1".into()));
    }
    let samples = generate_samples(geom, rules, count, seed, splits)?;
    write_dataset(out, profile_name, geom, seed, &samples)
}

/// A dataset on disk, opened through its manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    /// Opens `path`, which may be the dataset directory or its manifest file.
    pub fn open(path: &Path) -> Result<Self> {
        let manifest_path = if path.is_dir() { path.join("manifest.json") } else { path.to_path_buf() };
        let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { manifest: Manifest::load(&manifest_path)?, root })
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<Sample>> {
        self.manifest
            .samples
            .iter()
            .filter(|e| e.split == split)
            .map(|e| {
                Ok(Sample {
                    id: e.id.clone(),
                    seed: e.seed,
                    split: e.split,
                    image: image::load(&self.root.join(&e.image))?,
                    graph: Graph::load(&self.root.join(&e.graph))?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_parse_and_validate() {
        for p in Profile::ALL {
            assert_eq!(p.name().parse::<Profile>().unwrap(), p);
            p.geom().validate().unwrap();
        }
        assert!("huge".parse::<Profile>().is_err());
        assert_eq!(Profile::Generalized.geom().node_cap, 384);
    }

    #[test]
    fn split_assignment_is_contiguous() {
        let (count, fr) = SplitFractions::from_counts(8, 1, 1);
        let splits: Vec<Split> = (0..count).map(|i| fr.assign(i, count)).collect();
        assert_eq!(splits.iter().filter(|&&s| s == Split::Train).count(), 8);
        assert_eq!(splits[8], Split::Val);
        assert_eq!(splits[9], Split::Test);
    }

    #[test]
    fn samples_respect_cap_and_are_trees() {
        let geom = Profile::Mini.geom();
        let samples = generate_samples(&geom, &RuleSet::default(), 40, 3, SplitFractions::default()).unwrap();
        for s in &samples {
            assert!(s.graph.is_tree());
            assert!(s.graph.node_count() <= geom.node_cap);
            assert_eq!(s.image.dimensions(), (128, 128));
        }
    }

    #[test]
    fn exhausted_retries_report_the_seed() {
        let geom = GeomConfig { node_cap: 2, ..Profile::Mini.geom() };
        let err = draw_tree_with_retries(&geom, &RuleSet::default(), 77).unwrap_err();
        assert!(matches!(err, Error::RetriesExhausted { seed: 77, attempts: MAX_ATTEMPTS }));
    }
}
