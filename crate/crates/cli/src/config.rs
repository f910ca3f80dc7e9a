//! Run configuration: one TOML file holding the dataset, episode, training,
//! sweep and verification settings. Every key has a default, so an empty file
//! is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hgram::graph::{
    gen_synthetic_ba, gen_synthetic_cycle, load_dataset, BaConfig, CycleConfig, DatasetFormat,
    GraphStore,
};
use hgram::influence::VerifyConfig;
use hgram::meta::{SplitConfig, Task, TrainConfig};

use crate::CliError;

/// Name of the resolved configuration written next to every output.
pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Cycle,
    Ba,
    EdgeList,
    Packaged,
}

/// Where the graphs come from: a generator or files on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Directory (edge-list) or file (packaged) for file-backed datasets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub cycle: CycleConfig,
    pub ba: BaConfig,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            kind: DatasetKind::Cycle,
            path: None,
            cycle: CycleConfig::default(),
            ba: BaConfig::default(),
        }
    }
}

impl DatasetSpec {
    pub fn is_generator(&self) -> bool {
        matches!(self.kind, DatasetKind::Cycle | DatasetKind::Ba)
    }

    pub fn generator_seed(&self) -> u64 {
        match self.kind {
            DatasetKind::Ba => self.ba.seed,
            _ => self.cycle.seed,
        }
    }

    pub fn set_generator_seed(&mut self, seed: u64) {
        match self.kind {
            DatasetKind::Ba => self.ba.seed = seed,
            _ => self.cycle.seed = seed,
        }
    }

    pub fn load(&self) -> Result<GraphStore, CliError> {
        Ok(match self.kind {
            DatasetKind::Cycle => gen_synthetic_cycle(&self.cycle)?,
            DatasetKind::Ba => gen_synthetic_ba(&self.ba)?,
            DatasetKind::EdgeList => load_dataset(self.file()?, DatasetFormat::EdgeList)?,
            DatasetKind::Packaged => load_dataset(self.file()?, DatasetFormat::Packaged)?,
        })
    }

    fn file(&self) -> Result<&Path, CliError> {
        self.path.as_deref().ok_or_else(|| {
            CliError::Config(format!("dataset kind {:?} needs dataset.path", self.kind))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Shots,
    Hops,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: SweepAxis::Shots,
            values: vec![1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// One full run per seed; `--seed` overrides.
    pub seeds: Vec<u64>,
    /// Output directory; `--out` overrides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Folds to run; all `split.n_folds` folds when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<Vec<usize>>,
    /// Checkpoint evaluated by `eval`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub dataset: DatasetSpec,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: vec![0],
            out: None,
            folds: None,
            checkpoint: None,
            dataset: DatasetSpec::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            sweep: SweepConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn fold_list(&self) -> Vec<usize> {
        self.folds
            .clone()
            .unwrap_or_else(|| (0..self.split.n_folds).collect())
    }

    /// Range, combination and path checks, run before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if let Some(s) = self.seeds.iter().find(|&&s| s > i64::MAX as u64) {
            return bad(format!("seed {s} exceeds {}", i64::MAX));
        }
        let sp = &self.split;
        if sp.n_way < 2 || sp.shots == 0 || sp.queries == 0 {
            return bad(format!(
                "split needs n_way ≥ 2, shots ≥ 1, queries ≥ 1 (got {}, {}, {})",
                sp.n_way, sp.shots, sp.queries
            ));
        }
        if sp.train_episodes == 0 || sp.test_episodes == 0 {
            return bad("train_episodes and test_episodes must be positive".into());
        }
        if sp.n_folds < 2 {
            return bad(format!("n_folds must be at least 2, got {}", sp.n_folds));
        }
        if let Some(f) = self.fold_list().iter().find(|&&f| f >= sp.n_folds) {
            return bad(format!("fold {f} outside 0..{}", sp.n_folds));
        }
        if self.fold_list().is_empty() {
            return bad("folds must not be empty".into());
        }
        if sp.task == Task::Link {
            if sp.setup.disjoint_labels() {
                return bad(format!(
                    "link tasks have fixed classes; setup {} is not supported",
                    sp.setup
                ));
            }
            if sp.n_way != 2 {
                return bad(format!("link tasks are 2-way, got n_way = {}", sp.n_way));
            }
        }
        self.train.validate()?;
        if self.sweep.values.is_empty() || self.sweep.values.contains(&0) {
            return bad("sweep.values must be non-empty and positive".into());
        }
        self.verify.validate()?;
        if !self.dataset.is_generator() {
            match &self.dataset.path {
                None => {
                    return bad(format!(
                        "dataset kind {:?} needs dataset.path",
                        self.dataset.kind
                    ))
                }
                Some(p) if !p.exists() => {
                    return bad(format!("dataset path {} does not exist", p.display()))
                }
                _ => {}
            }
        }
        if let Some(p) = &self.checkpoint {
            if !p.exists() {
                return bad(format!("checkpoint {} does not exist", p.display()));
            }
        }
        Ok(())
    }
}
