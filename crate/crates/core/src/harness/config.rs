use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::click::ClickModel;
use crate::data::{make_synthetic, Dataset};
use crate::dbgd::{self, Comparator};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_CUTOFF;
use crate::pdgd;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dbgd,
    Pdgd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dbgd => "dbgd",
            Algorithm::Pdgd => "pdgd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorKind {
    Probabilistic,
    TeamDraft,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic {
        queries: usize,
        docs: usize,
        dim: usize,
        seed: u64,
    },
    Letor {
        train: PathBuf,
        test: PathBuf,
        #[serde(default = "default_true")]
        normalize: bool,
    },
}

fn default_true() -> bool {
    true
}

impl DatasetSpec {
    /// The default synthetic set: 300 training queries of 10 documents with
    /// 64 features, seed 1.
    pub fn bundled() -> Self {
        DatasetSpec::Synthetic {
            queries: 300,
            docs: 10,
            dim: 64,
            seed: 1,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Synthetic {
                queries,
                docs,
                dim,
                seed,
            } => Ok(make_synthetic(*queries, *docs, *dim, *seed)?.dataset),
            DatasetSpec::Letor {
                train,
                test,
                normalize,
            } => Dataset::from_letor_files(train, test, *normalize),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let DatasetSpec::Letor { train, test, .. } = self {
            for p in [train, test] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

/// Either a number of log-spaced evaluation points or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointSpec {
    LogSpaced(usize),
    Explicit(Vec<u64>),
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec::LogSpaced(DEFAULT_CHECKPOINTS)
    }
}

pub const DEFAULT_CHECKPOINTS: usize = 30;

impl CheckpointSpec {
    /// Impression counts at which held-out NDCG is measured. Always starts at
    /// 0 and ends at `impressions`.
    pub fn schedule(&self, impressions: u64) -> Vec<u64> {
        let mut points = match self {
            CheckpointSpec::LogSpaced(n) => log_schedule(impressions, *n),
            CheckpointSpec::Explicit(v) => v.iter().copied().filter(|&c| c <= impressions).collect(),
        };
        points.push(0);
        points.push(impressions);
        points.sort_unstable();
        points.dedup();
        points
    }
}

/// `n` points spaced evenly in log scale between 1 and `horizon`, rounded
/// and deduplicated.
pub fn log_schedule(horizon: u64, n: usize) -> Vec<u64> {
    if horizon == 0 || n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![horizon];
    }
    let top = (horizon as f64).ln();
    let mut v: Vec<u64> = (0..n)
        .map(|i| (top * i as f64 / (n - 1) as f64).exp().round() as u64)
        .map(|c| c.clamp(1, horizon))
        .collect();
    v.dedup();
    v
}

/// Everything needed to reproduce a set of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub algorithm: Algorithm,
    /// DBGD only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparator: Option<ComparatorKind>,
    pub click_model: ClickModel,
    pub dataset: DatasetSpec,
    pub impressions: u64,
    pub repeats: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    /// Defaults to 0.1 for PDGD and 0.001 for DBGD.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default = "default_radius")]
    pub sphere_radius: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// `summary.json` of an earlier experiment to test against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PathBuf>,
}

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}
fn default_radius() -> f64 {
    dbgd::DEFAULT_SPHERE_RADIUS
}
fn default_tau() -> f64 {
    dbgd::probabilistic::DEFAULT_TAU
}

impl ExperimentConfig {
    /// Config with the default hyperparameters for `algorithm`.
    pub fn new(algorithm: Algorithm, click_model: ClickModel, dataset: DatasetSpec) -> Self {
        ExperimentConfig {
            name: String::new(),
            algorithm,
            comparator: (algorithm == Algorithm::Dbgd).then_some(ComparatorKind::Probabilistic),
            click_model,
            dataset,
            impressions: 1_000_000,
            repeats: 125,
            cutoff: DEFAULT_CUTOFF,
            learning_rate: None,
            sphere_radius: dbgd::DEFAULT_SPHERE_RADIUS,
            tau: dbgd::probabilistic::DEFAULT_TAU,
            base_seed: 0,
            checkpoints: CheckpointSpec::default(),
            output_dir: None,
            baseline: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config; relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.dataset.resolve_paths(base);
        for p in [&mut cfg.output_dir, &mut cfg.baseline].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.name.is_empty() {
            cfg.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.impressions == 0 {
            return fail("impressions must be at least 1".into());
        }
        if self.repeats == 0 {
            return fail("repeats must be at least 1".into());
        }
        if self.cutoff == 0 {
            return fail("cutoff must be at least 1".into());
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0 && lr.is_finite()) {
                return fail(format!("learning_rate must be positive, got {lr}"));
            }
        }
        if !(self.sphere_radius > 0.0 && self.sphere_radius.is_finite()) {
            return fail(format!("sphere_radius must be positive, got {}", self.sphere_radius));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return fail(format!("tau must be non-negative, got {}", self.tau));
        }
        if self.algorithm == Algorithm::Pdgd && self.comparator.is_some() {
            return fail("comparator only applies to dbgd".into());
        }
        if let DatasetSpec::Synthetic { queries, docs, dim, .. } = self.dataset {
            if queries == 0 || docs == 0 || dim == 0 {
                return fail("synthetic dataset sizes must be positive".into());
            }
        }
        Ok(())
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate.unwrap_or(match self.algorithm {
            Algorithm::Dbgd => dbgd::DEFAULT_LEARNING_RATE,
            Algorithm::Pdgd => pdgd::DEFAULT_LEARNING_RATE,
        })
    }

    pub fn comparator(&self) -> Option<Comparator> {
        match self.algorithm {
            Algorithm::Pdgd => None,
            Algorithm::Dbgd => Some(match self.comparator.unwrap_or(ComparatorKind::Probabilistic) {
                ComparatorKind::Probabilistic => Comparator::Probabilistic { tau: self.tau },
                ComparatorKind::TeamDraft => Comparator::TeamDraft,
                ComparatorKind::Oracle => Comparator::Oracle,
            }),
        }
    }

    pub fn schedule(&self) -> Vec<u64> {
        self.checkpoints.schedule(self.impressions)
    }

    /// Short label such as `dbgd-oracle` or `pdgd-perfect`.
    pub fn label(&self) -> String {
        if !self.name.is_empty() {
            return self.name.clone();
        }
        match self.comparator() {
            Some(Comparator::Oracle) => "dbgd-oracle".into(),
            Some(c @ Comparator::TeamDraft) => format!("dbgd-{c}-{}", self.click_model),
            _ => format!("{}-{}", self.algorithm.name(), self.click_model),
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
