use serde::{Deserialize, Serialize};

use super::episode::MetaSplit;
use super::stats::{summarize, Summary};
use super::train::{meta_test, meta_train, Head, TrainConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Meta updates and prototypes.
    #[serde(rename = "h-gram")]
    Full,
    /// Prototypes without meta updates: the initialization is never
    /// trained, test episodes still adapt on their support.
    #[serde(rename = "h-protonet")]
    ProtoNet,
    /// Meta updates with a per-episode linear head instead of prototypes.
    #[serde(rename = "h-maml")]
    Maml,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::ProtoNet, Variant::Maml];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "h-gram",
            Variant::ProtoNet => "h-protonet",
            Variant::Maml => "h-maml",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    /// Mean test accuracy per fold.
    pub fold_accuracies: Vec<f64>,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    /// Fingerprints of every fold's test episodes, shared by all variants.
    pub episode_hashes: Vec<Vec<u64>>,
}

/// Train and test every variant on each fold from the same initialization
/// (drawn from `seed`) and the same episodes.
pub fn run_ablation(folds: &[MetaSplit], cfg: &TrainConfig, seed: u64) -> Result<AblationTable> {
    let first = folds
        .first()
        .ok_or_else(|| Error::invalid("no folds to run"))?;
    let input_dim = first
        .train
        .first()
        .map(|e| e.support[0].0.features().cols())
        .ok_or_else(|| Error::invalid("fold without training episodes"))?;
    let mut rows = Vec::new();
    for variant in Variant::ALL {
        let mut fold_accuracies = Vec::new();
        for split in folds {
            let init = cfg.init_params(input_dim, seed)?;
            let (params, head) = match variant {
                Variant::Full => (
                    meta_train(split, cfg, init, Head::Prototype, seed)?.params,
                    Head::Prototype,
                ),
                Variant::ProtoNet => (init, Head::Prototype),
                Variant::Maml => (
                    meta_train(split, cfg, init, Head::Linear, seed)?.params,
                    Head::Linear,
                ),
            };
            let m = meta_test(&params, &split.test, cfg.alpha, cfg.test_steps, head)?;
            fold_accuracies.push(m.summary.mean);
        }
        let summary = summarize(&fold_accuracies);
        rows.push(AblationRow {
            variant,
            fold_accuracies,
            summary,
        });
    }
    let episode_hashes = folds
        .iter()
        .map(|s| s.test.iter().map(|e| e.fingerprint()).collect())
        .collect();
    Ok(AblationTable {
        rows,
        episode_hashes,
    })
}
