//! The six subcommands. Each writes `effective_config.toml` first, then its
//! artifacts, and returns the summary it also stores on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use hgram::encoder::{load_checkpoint, save_checkpoint, ParameterSet};
use hgram::graph::{save_dataset, DatasetFormat, GraphStore};
use hgram::influence::{verify_bounds, CurvePoint, VerifyConfig};
use hgram::meta::{
    make_meta_split, meta_test, meta_train, run_ablation, summarize, AblationTable, Head,
    SplitConfig, Summary, TrainConfig, Variant,
};

use crate::config::{DatasetKind, SweepAxis, EFFECTIVE_CONFIG};
use crate::{CliError, Invocation};

pub const SUMMARY_FILE: &str = "summary.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const LOG_FILE: &str = "log.jsonl";
pub const VALIDATION_FILE: &str = "validation.jsonl";

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CliError> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    write_text(path, &text)
}

fn write_effective(inv: &Invocation) -> Result<(), CliError> {
    write_text(&inv.out.join(EFFECTIVE_CONFIG), &inv.config.to_toml())
}

fn unit_dir(root: &Path, seed: u64, fold: usize) -> PathBuf {
    root.join(format!("seed-{seed}"))
        .join(format!("fold-{fold}"))
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Dataset statistics written by `generate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: DatasetKind,
    pub seed: u64,
    pub params: serde_json::Value,
    pub n_graphs: usize,
    pub total_nodes: usize,
    pub total_edges: usize,
    pub num_labels: usize,
    pub feature_dim: usize,
    pub label_histogram: Vec<usize>,
    pub files: Vec<String>,
}

/// Generates the configured synthetic dataset into `<out>/dataset` and
/// writes `<out>/manifest.json`.
pub fn generate(inv: &Invocation) -> Result<Manifest, CliError> {
    let spec = &inv.config.dataset;
    if !spec.is_generator() {
        return Err(CliError::Config(format!(
            "generate needs a generator dataset kind, got {:?}",
            spec.kind
        )));
    }
    write_effective(inv)?;
    let gs = spec.load()?;
    let dir = inv.out.join("dataset");
    save_dataset(&gs, &dir, DatasetFormat::EdgeList)?;
    let mut files: Vec<String> = fs::read_dir(&dir)
        .map_err(|e| io_err(&dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| format!("dataset/{}", e.file_name().to_string_lossy()))
        .collect();
    files.sort();
    let params = match spec.kind {
        DatasetKind::Ba => serde_json::to_value(&spec.ba),
        _ => serde_json::to_value(&spec.cycle),
    }
    .expect("generator config serializes");
    let manifest = Manifest {
        generator: spec.kind,
        seed: spec.generator_seed(),
        params,
        n_graphs: gs.len(),
        total_nodes: gs.total_nodes(),
        total_edges: gs.total_edges(),
        num_labels: gs.num_labels(),
        feature_dim: gs.feature_dim(),
        label_histogram: gs.label_histogram(),
        files,
    };
    write_json(&inv.out.join("manifest.json"), &manifest)?;
    info!(
        "generated {} graphs, {} nodes, {} labels into {}",
        manifest.n_graphs,
        manifest.total_nodes,
        manifest.num_labels,
        dir.display()
    );
    Ok(manifest)
}

/// Test result of one (seed, fold) training unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub seed: u64,
    pub fold: usize,
    /// Mean test-episode accuracy.
    pub accuracy: f64,
    pub ci95: f64,
    pub accuracies: Vec<f64>,
    pub meta_steps: usize,
    pub best_step: usize,
    pub best_val: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seeds: Vec<u64>,
    pub folds: Vec<usize>,
    pub units: Vec<UnitResult>,
    /// Over unit accuracies.
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

impl RunSummary {
    fn new(seeds: &[u64], folds: &[usize], units: Vec<UnitResult>) -> Self {
        let s = summarize(&units.iter().map(|u| u.accuracy).collect::<Vec<_>>());
        RunSummary {
            seeds: seeds.to_vec(),
            folds: folds.to_vec(),
            units,
            mean: s.mean,
            ci95: s.ci95,
            n: s.n,
        }
    }
}

/// Meta-trains and tests one fold. Artifacts land in `dir`; `metrics.json`
/// is written last, so its presence marks a finished unit that `resume`
/// reuses.
pub fn run_unit(
    gs: &GraphStore,
    split_cfg: &SplitConfig,
    train_cfg: &TrainConfig,
    seed: u64,
    fold: usize,
    dir: &Path,
    resume: bool,
) -> Result<UnitResult, CliError> {
    let metrics = dir.join(METRICS_FILE);
    if resume && metrics.exists() && dir.join(CHECKPOINT_FILE).exists() {
        info!("seed {seed} fold {fold}: reusing {}", metrics.display());
        return read_json(&metrics);
    }
    let split = make_meta_split(
        gs,
        &SplitConfig {
            fold,
            ..split_cfg.clone()
        },
        seed,
    )?;
    let init = train_cfg.init_params(gs.feature_dim(), seed)?;
    let outcome = meta_train(&split, train_cfg, init, Head::Prototype, seed)?;
    save_checkpoint(&outcome.params, &dir.join(CHECKPOINT_FILE))?;
    write_jsonl(&dir.join(LOG_FILE), &outcome.log)?;
    write_jsonl(&dir.join(VALIDATION_FILE), &outcome.validation)?;
    let test = meta_test(
        &outcome.params,
        &split.test,
        train_cfg.alpha,
        train_cfg.test_steps,
        Head::Prototype,
    )?;
    let result = UnitResult {
        seed,
        fold,
        accuracy: test.summary.mean,
        ci95: test.summary.ci95,
        accuracies: test.accuracies,
        meta_steps: outcome.log.len(),
        best_step: outcome.best_step,
        best_val: outcome.best_val,
    };
    write_json(&metrics, &result)?;
    info!(
        "seed {seed} fold {fold}: test accuracy {:.4} after {} meta steps (best at {})",
        result.accuracy, result.meta_steps, result.best_step
    );
    Ok(result)
}

fn train_units(
    gs: &GraphStore,
    inv: &Invocation,
    split_cfg: &SplitConfig,
    root: &Path,
    resume: bool,
) -> Result<RunSummary, CliError> {
    let cfg = &inv.config;
    let folds = cfg.fold_list();
    let mut units = Vec::new();
    for &seed in &cfg.seeds {
        for &fold in &folds {
            units.push(run_unit(
                gs,
                split_cfg,
                &cfg.train,
                seed,
                fold,
                &unit_dir(root, seed, fold),
                resume,
            )?);
        }
    }
    Ok(RunSummary::new(&cfg.seeds, &folds, units))
}

/// Meta-trains every (seed, fold) unit and writes `summary.json`.
pub fn train(inv: &Invocation, resume: bool) -> Result<RunSummary, CliError> {
    write_effective(inv)?;
    let gs = inv.config.dataset.load()?;
    let summary = train_units(&gs, inv, &inv.config.split, &inv.out, resume)?;
    write_json(&inv.out.join(SUMMARY_FILE), &summary)?;
    info!(
        "mean accuracy {:.4} ± {:.4} over {} units",
        summary.mean, summary.ci95, summary.n
    );
    Ok(summary)
}

/// Fails unless `params` has exactly the tensors the configured encoder
/// would have, naming every mismatch.
pub fn check_checkpoint(
    params: &ParameterSet,
    train: &TrainConfig,
    input_dim: usize,
) -> Result<(), CliError> {
    let expected = train.init_params(input_dim, 0)?;
    let mut problems = Vec::new();
    let n = expected.tensors().len().max(params.tensors().len());
    for i in 0..n {
        match (params.tensors().get(i), expected.tensors().get(i)) {
            (Some(a), Some(b)) if a.name == b.name && a.shape == b.shape => {}
            (Some(a), Some(b)) => problems.push(format!(
                "{}: checkpoint {}{:?}, config {}{:?}",
                b.name, a.name, a.shape, b.name, b.shape
            )),
            (Some(a), None) => problems.push(format!("{}: not in the configured encoder", a.name)),
            (None, Some(b)) => problems.push(format!("{}: missing from the checkpoint", b.name)),
            (None, None) => unreachable!(),
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "checkpoint does not match the configured encoder: {}",
            problems.join("; ")
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalUnit {
    pub seed: u64,
    pub fold: usize,
    pub accuracy: f64,
    pub ci95: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub checkpoint: PathBuf,
    pub units: Vec<EvalUnit>,
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

/// Meta-tests a checkpoint on the test episodes of every (seed, fold).
pub fn eval(inv: &Invocation, checkpoint: Option<&Path>) -> Result<EvalReport, CliError> {
    let cfg = &inv.config;
    let path = checkpoint
        .map(Path::to_path_buf)
        .or_else(|| cfg.checkpoint.clone())
        .ok_or_else(|| {
            CliError::Config("eval needs --checkpoint or checkpoint in the config".into())
        })?;
    write_effective(inv)?;
    let gs = cfg.dataset.load()?;
    let params = load_checkpoint(&path)?;
    check_checkpoint(&params, &cfg.train, gs.feature_dim())?;
    let mut units = Vec::new();
    for &seed in &cfg.seeds {
        for fold in cfg.fold_list() {
            let split = make_meta_split(
                &gs,
                &SplitConfig {
                    fold,
                    ..cfg.split.clone()
                },
                seed,
            )?;
            let m = meta_test(
                &params,
                &split.test,
                cfg.train.alpha,
                cfg.train.test_steps,
                Head::Prototype,
            )?;
            let unit = EvalUnit {
                seed,
                fold,
                accuracy: m.summary.mean,
                ci95: m.summary.ci95,
                accuracies: m.accuracies,
            };
            write_json(&unit_dir(&inv.out, seed, fold).join(METRICS_FILE), &unit)?;
            units.push(unit);
        }
    }
    let s = summarize(&units.iter().map(|u| u.accuracy).collect::<Vec<_>>());
    let report = EvalReport {
        checkpoint: path,
        units,
        mean: s.mean,
        ci95: s.ci95,
        n: s.n,
    };
    write_json(&inv.out.join("eval.json"), &report)?;
    info!("eval accuracy {:.4} ± {:.4}", report.mean, report.ci95);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
    /// Raw per-unit results for re-analysis.
    pub units: Vec<UnitResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `axis,value,mean,ci95,n,accuracies` with per-unit accuracies joined
    /// by `;` in seed-major, fold-minor order.
    pub fn to_csv(&self) -> String {
        let axis = match self.axis {
            SweepAxis::Shots => "shots",
            SweepAxis::Hops => "hops",
        };
        let mut s = String::from("axis,value,mean,ci95,n,accuracies\n");
        for r in &self.rows {
            let raw: Vec<f64> = r.units.iter().map(|u| u.accuracy).collect();
            let _ = writeln!(
                s,
                "{axis},{},{},{},{},{}",
                r.value,
                r.mean,
                r.ci95,
                r.n,
                join_floats(&raw)
            );
        }
        s
    }
}

/// One full train/test per axis value, seed and fold.
pub fn sweep(inv: &Invocation, resume: bool) -> Result<SweepTable, CliError> {
    write_effective(inv)?;
    let cfg = &inv.config;
    let gs = cfg.dataset.load()?;
    let mut rows = Vec::new();
    for &value in &cfg.sweep.values {
        let (split, name) = match cfg.sweep.axis {
            SweepAxis::Shots => (
                SplitConfig {
                    shots: value,
                    ..cfg.split.clone()
                },
                format!("shots-{value}"),
            ),
            SweepAxis::Hops => (
                SplitConfig {
                    k_hops: value,
                    ..cfg.split.clone()
                },
                format!("hops-{value}"),
            ),
        };
        info!("sweep {name}");
        let run = train_units(&gs, inv, &split, &inv.out.join(name), resume)?;
        rows.push(SweepRow {
            value,
            mean: run.mean,
            ci95: run.ci95,
            n: run.n,
            units: run.units,
        });
    }
    let table = SweepTable {
        axis: cfg.sweep.axis,
        rows,
    };
    write_json(&inv.out.join("sweep.json"), &table)?;
    write_text(&inv.out.join("sweep.csv"), &table.to_csv())?;
    Ok(table)
}

/// Header of one verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub config: VerifyConfig,
    pub pairs: usize,
    pub roots: usize,
    pub influence_violations: usize,
    pub loss_violations: usize,
    pub loss_all_v_failures: usize,
    pub tree_curve_monotone: bool,
    pub tree_curve: Vec<CurvePoint>,
    pub relu_tree_curve: Vec<CurvePoint>,
    pub curve: Vec<CurvePoint>,
}

/// Runs the bound sweep once per seed. Reports are written before a
/// violation is turned into an error.
pub fn verify(inv: &Invocation) -> Result<Vec<VerifySummary>, CliError> {
    write_effective(inv)?;
    let mut out = Vec::new();
    for &seed in &inv.config.seeds {
        let cfg = VerifyConfig {
            seed,
            ..inv.config.verify.clone()
        };
        let r = verify_bounds(&cfg)?;
        let dir = inv.out.join(format!("seed-{seed}"));
        write_text(&dir.join("pairs.csv"), &r.pairs_csv())?;
        write_text(&dir.join("loss.csv"), &r.loss_csv())?;
        write_text(&dir.join("curve.csv"), &r.curve_csv())?;
        let summary = VerifySummary {
            seed,
            config: cfg,
            pairs: r.rows.len(),
            roots: r.loss_rows.len(),
            influence_violations: r.influence_violations,
            loss_violations: r.loss_violations,
            loss_all_v_failures: r.loss_all_v_failures,
            tree_curve_monotone: r.tree_curve_monotone,
            tree_curve: r.tree_curve,
            relu_tree_curve: r.relu_tree_curve,
            curve: r.curve,
        };
        write_json(&dir.join("report.json"), &summary)?;
        info!(
            "seed {seed}: {} pairs, {} influence and {} loss violations, tree curve monotone: {}",
            summary.pairs,
            summary.influence_violations,
            summary.loss_violations,
            summary.tree_curve_monotone
        );
        out.push(summary);
    }
    write_json(&inv.out.join("verify.json"), &out)?;
    let violations: usize = out
        .iter()
        .map(|s| s.influence_violations + s.loss_violations)
        .sum();
    if violations > 0 {
        return Err(CliError::Violation(violations));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSummaryRow {
    pub variant: Variant,
    /// Per-fold accuracies, seed-major.
    pub fold_accuracies: Vec<f64>,
    pub summary: Summary,
    /// Highest mean accuracy; ties go to the earlier row.
    pub best: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationSummaryRow>,
    pub seeds: Vec<u64>,
    pub tables: Vec<AblationTable>,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("variant,mean,ci95,n,best,fold_accuracies\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.variant.name(),
                r.summary.mean,
                r.summary.ci95,
                r.summary.n,
                r.best,
                join_floats(&r.fold_accuracies)
            );
        }
        s
    }
}

/// All ablation variants on the same folds and initializations.
pub fn ablate(inv: &Invocation) -> Result<AblationReport, CliError> {
    write_effective(inv)?;
    let cfg = &inv.config;
    let gs = cfg.dataset.load()?;
    let mut tables = Vec::new();
    for &seed in &cfg.seeds {
        let splits = cfg
            .fold_list()
            .into_iter()
            .map(|fold| {
                make_meta_split(
                    &gs,
                    &SplitConfig {
                        fold,
                        ..cfg.split.clone()
                    },
                    seed,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let table = run_ablation(&splits, &cfg.train, seed)?;
        for r in &table.rows {
            info!("seed {seed}: {} {:.4}", r.variant.name(), r.summary.mean);
        }
        tables.push(table);
    }
    let mut rows: Vec<AblationSummaryRow> = Variant::ALL
        .iter()
        .enumerate()
        .map(|(i, &variant)| {
            let fold_accuracies: Vec<f64> = tables
                .iter()
                .flat_map(|t| t.rows[i].fold_accuracies.clone())
                .collect();
            AblationSummaryRow {
                variant,
                summary: summarize(&fold_accuracies),
                fold_accuracies,
                best: false,
            }
        })
        .collect();
    let best = (0..rows.len())
        .reduce(|a, b| {
            if rows[b].summary.mean > rows[a].summary.mean {
                b
            } else {
                a
            }
        })
        .expect("three variants");
    rows[best].best = true;
    let report = AblationReport {
        rows,
        seeds: cfg.seeds.clone(),
        tables,
    };
    write_json(&inv.out.join("ablation.json"), &report)?;
    write_text(&inv.out.join("ablation.csv"), &report.to_csv())?;
    let hashes: Vec<_> = report.tables.iter().map(|t| &t.episode_hashes).collect();
    write_json(&inv.out.join("episode_hashes.json"), &hashes)?;
    Ok(report)
}
