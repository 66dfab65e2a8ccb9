//! Run configuration: TOML file, command-line overrides, resolved snapshot.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{Profile, SplitFractions};
use crate::error::{Error, Result};
use crate::lsystem::{GeomConfig, RuleSet};
use crate::metrics::MetricConfig;
use crate::predictor::{Mode, TrainConfig};
use crate::sfs::ABLATION_LAMBDAS;

pub const SNAPSHOT_FILE: &str = "resolved_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub count: usize,
    pub val_fraction: f64,
    pub test_fraction: f64,
    /// Rule file replacing the bundled rule set.
    pub rules: Option<PathBuf>,
    /// Full geometry replacing the profile's.
    pub geom: Option<GeomConfig>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self { count: 100, val_fraction: 0.1, test_fraction: 0.1, rules: None, geom: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub profile: Profile,
    pub gen: GenConfig,
    pub train: TrainConfig,
    pub metrics: MetricConfig,
    pub ablation_lambdas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            profile: Profile::Standard,
            gen: GenConfig::default(),
            train: TrainConfig::default(),
            metrics: MetricConfig::default(),
            ablation_lambdas: ABLATION_LAMBDAS.to_vec(),
        }
    }
}

/// Values given on the command line; `None` keeps the file's value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub profile: Option<Profile>,
    pub mode: Option<Mode>,
    pub lambda: Option<f64>,
    pub count: Option<usize>,
    pub epochs: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::file(path, e))
    }

    /// Applies overrides, copies run-level fields into sections and validates.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = o.profile {
            self.profile = p;
        }
        if let Some(m) = o.mode {
            self.train.mode = m;
        }
        if let Some(l) = o.lambda {
            self.train.lambda = l;
        }
        if let Some(c) = o.count {
            self.gen.count = c;
        }
        if let Some(e) = o.epochs {
            self.train.epochs = e;
        }
        // TOML integers are signed 64-bit.
        if self.seed > i64::MAX as u64 {
            return Err(Error::InvalidArgument(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        self.train.seed = self.seed;
        self.train.metrics = self.metrics;
        self.train.validate()?;
        self.geom().validate()?;
        let f = self.splits();
        if !(f.val >= 0.0 && f.test >= 0.0 && f.val + f.test <= 1.0) {
            return Err(Error::InvalidArgument(format!("split fractions {f:?} must be nonnegative and sum to at most 1")));
        }
        Ok(self)
    }

    pub fn geom(&self) -> GeomConfig {
        self.gen.geom.clone().unwrap_or_else(|| self.profile.geom())
    }

    pub fn splits(&self) -> SplitFractions {
        SplitFractions { val: self.gen.val_fraction, test: self.gen.test_fraction }
    }

    pub fn rules(&self) -> Result<RuleSet> {
        match &self.gen.rules {
            Some(path) => RuleSet::load(path),
            None => Ok(RuleSet::default()),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidArgument(format!("config not representable: {e}")))
    }

    pub fn write_snapshot(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(SNAPSHOT_FILE);
        fs::write(&path, self.to_toml_string()?).map_err(|e| Error::file(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_and_propagate() {
        let text = "seed = 4\nprofile = \"mini\"\n[train]\nepochs = 3\nmode = \"ttc\"\n[metrics]\ntopo_radius = 9.0\n";
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let o = Overrides { lambda: Some(5.0), seed: Some(9), ..Overrides::default() };
        let r = cfg.resolve(&o).unwrap();
        assert_eq!((r.seed, r.train.seed), (9, 9));
        assert_eq!(r.train.mode, Mode::TestTimeConstraint);
        assert_eq!(r.train.lambda, 5.0);
        assert_eq!(r.train.epochs, 3);
        assert_eq!(r.train.metrics.topo_radius, 9.0);
        assert_eq!(r.geom(), Profile::Mini.geom());
    }

    #[test]
    fn snapshot_round_trips() {
        let r = RunConfig::default().resolve(&Overrides { profile: Some(Profile::Generalized), ..Default::default() }).unwrap();
        let text = r.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml_str("colour = 3").is_err());
        assert!(RunConfig::from_toml_str("[train]\nmode = \"tree\"").is_err());
        let bad = RunConfig { seed: u64::MAX, ..RunConfig::default() };
        assert!(bad.resolve(&Overrides::default()).is_err());
        let neg = Overrides { lambda: Some(-1.0), ..Overrides::default() };
        assert!(RunConfig::default().resolve(&neg).is_err());
    }
}
