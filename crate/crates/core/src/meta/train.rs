use log::{debug, info};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{Episode, MetaSplit};
use super::optim::{riemannian_adam_step, rsgd_step, MetaOptimizer, OptimizerState};
use super::stats::{summarize, Summary};
use crate::autodiff::{evaluate_with_gradient, Objective};
use crate::encoder::{feature_rows, forward, Activation, Arch, Layout, ParameterSet};
use crate::error::{Error, Result};
use crate::graph::Subgraph;
use crate::hyperbolic::{ops, Curvature, Real};
use crate::params::{GradientBundle, ParamGroup, Tensor};
use crate::proto::{log_probs, prototypes};

/// Classification head on top of the encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Distance softmax over hyperbolic class prototypes.
    Prototype,
    /// Linear map on `log_0` of the pooled encoding, zero-initialized for
    /// every episode.
    Linear,
}

/// Encoder, optimizer and schedule settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Hidden and output width of every layer.
    pub dim: usize,
    pub layers: usize,
    pub curvature: f64,
    pub activation: Activation,
    /// Inner (adaptation) learning rate.
    pub alpha: f64,
    /// Meta learning rate.
    pub beta: f64,
    pub inner_steps: usize,
    pub test_steps: usize,
    /// Episodes per meta step.
    pub batch_size: usize,
    pub max_meta_steps: usize,
    /// Meta steps between validation passes.
    pub eval_every: usize,
    /// Validation passes without improvement before stopping.
    pub patience: usize,
    pub optimizer: MetaOptimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 32,
            layers: 2,
            curvature: 1.0,
            activation: Activation::Relu,
            alpha: 0.01,
            beta: 0.01,
            inner_steps: 5,
            test_steps: 10,
            batch_size: 4,
            max_meta_steps: 100,
            eval_every: 10,
            patience: 5,
            optimizer: MetaOptimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.layers == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::invalid(
                "dim, layers, batch_size and eval_every must be positive",
            ));
        }
        Curvature::new(self.curvature)?;
        OptimizerState::new(self.alpha, self.beta, self.inner_steps, self.optimizer)?;
        Ok(())
    }

    /// `[input_dim, dim, …, dim]` with `layers` transforms.
    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(self.dim, self.layers));
        dims
    }

    pub fn init_params(&self, input_dim: usize, seed: u64) -> Result<ParameterSet> {
        self.validate()?;
        ParameterSet::init_with(
            &self.layer_dims(input_dim),
            Curvature::new(self.curvature)?,
            self.activation,
            seed,
        )
    }
}

/// Encoder inputs of one subgraph, computed once per episode.
struct Prepared {
    layout: Layout,
    x: Vec<Vec<f64>>,
}

fn prepare(set: &[(Subgraph, usize)]) -> Vec<(Prepared, usize)> {
    set.iter()
        .map(|(s, y)| {
            (
                Prepared {
                    layout: Layout::new(s),
                    x: feature_rows(s),
                },
                *y,
            )
        })
        .collect()
}

fn embed<T: Real>(arch: &Arch, params: &[Vec<T>], p: &Prepared) -> Vec<T> {
    let x: Vec<Vec<T>> =
        p.x.iter()
            .map(|r| r.iter().map(|&v| T::cst(v)).collect())
            .collect();
    forward(arch, params, &p.layout, &x).1
}

/// Mean negative log-likelihood of `targets` (or of the support itself when
/// `targets` is `None`) under the episode's head.
struct EpisodeLoss<'a> {
    arch: &'a Arch,
    head: Head,
    n_way: usize,
    support: &'a [(Prepared, usize)],
    targets: Option<&'a [(Prepared, usize)]>,
}

fn log_softmax<T: Real>(logits: Vec<T>) -> Vec<T> {
    let m = logits
        .iter()
        .map(|z| z.val())
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<T> = logits.iter().map(|&z| z - m).collect();
    let exps: Vec<T> = shifted.iter().map(|&z| z.exp()).collect();
    let lse = T::sum(&exps).ln();
    shifted.iter().map(|&z| z - lse).collect()
}

fn linear_logits<T: Real>(e: &[T], w: &[T], b: &[T], c: f64) -> Vec<T> {
    let t = ops::log0(e, c);
    let d = t.len();
    (0..b.len())
        .map(|k| T::dot(&w[k * d..(k + 1) * d], &t) + b[k])
        .collect()
}

impl EpisodeLoss<'_> {
    /// Log-probabilities for every target example.
    fn scores<T: Real>(&self, params: &[Vec<T>]) -> Vec<(Vec<T>, usize)> {
        let c = self.arch.curvature.value();
        let n_enc = 2 * self.arch.num_layers();
        let enc = &params[..n_enc];
        let sup: Vec<Vec<T>> = self
            .support
            .iter()
            .map(|(p, _)| embed(self.arch, enc, p))
            .collect();
        let targets: Vec<(Vec<T>, usize)> = match self.targets {
            None => sup
                .iter()
                .cloned()
                .zip(self.support.iter().map(|(_, y)| *y))
                .collect(),
            Some(q) => q
                .iter()
                .map(|(p, y)| (embed(self.arch, enc, p), *y))
                .collect(),
        };
        match self.head {
            Head::Prototype => {
                let ys: Vec<usize> = self.support.iter().map(|(_, y)| *y).collect();
                let protos = prototypes(&sup, &ys, self.n_way, c);
                targets
                    .into_iter()
                    .map(|(e, y)| (log_probs(&e, &protos, c), y))
                    .collect()
            }
            Head::Linear => {
                let (w, b) = (&params[n_enc], &params[n_enc + 1]);
                targets
                    .into_iter()
                    .map(|(e, y)| (log_softmax(linear_logits(&e, w, b, c)), y))
                    .collect()
            }
        }
    }

    fn accuracy(&self, params: &[Vec<f64>]) -> f64 {
        let scores = self.scores(params);
        let hits = scores
            .iter()
            .filter(|(lp, y)| {
                let mut best = 0;
                for (k, &v) in lp.iter().enumerate() {
                    if v > lp[best] {
                        best = k;
                    }
                }
                best == *y
            })
            .count();
        hits as f64 / scores.len() as f64
    }
}

impl Objective for EpisodeLoss<'_> {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        let losses: Vec<T> = self
            .scores(params)
            .into_iter()
            .map(|(lp, y)| -lp[y])
            .collect();
        Ok(vec![T::sum(&losses) / losses.len() as f64])
    }
}

fn head_tensors(n_way: usize, d: usize) -> Vec<Tensor> {
    vec![
        Tensor::new(
            "head.weight",
            vec![n_way, d],
            ParamGroup::EuclideanTangent,
            vec![0.0; n_way * d],
        )
        .unwrap(),
        Tensor::new(
            "head.bias",
            vec![n_way],
            ParamGroup::EuclideanTangent,
            vec![0.0; n_way],
        )
        .unwrap(),
    ]
}

fn check_episode(ep: &Episode) -> Result<()> {
    if ep.support.is_empty() || ep.query.is_empty() {
        return Err(Error::invalid(
            "episode needs a nonempty support and query set",
        ));
    }
    if ep
        .support
        .iter()
        .chain(&ep.query)
        .any(|(_, y)| *y >= ep.n_way())
    {
        return Err(Error::invalid("episode class index out of range"));
    }
    Ok(())
}

/// `steps` successive Riemannian SGD steps on the support loss.
fn adapt(loss: &EpisodeLoss<'_>, tensors: &mut [Tensor], alpha: f64, steps: usize) -> Result<()> {
    let c = loss.arch.curvature.value();
    for step in 0..steps {
        let (value, grads) = evaluate_with_gradient(loss, tensors).map_err(|e| match e {
            Error::NumericalFailure(m) => {
                Error::NumericalFailure(format!("inner step {step}: {m}"))
            }
            other => other,
        })?;
        if !value.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "inner step {step}: loss is {value}"
            )));
        }
        if alpha != 0.0 {
            rsgd_step(tensors, &grads, alpha, c);
        }
    }
    Ok(())
}

/// Episode-specific copy of the parameters after adaptation (encoder
/// tensors first, then the head tensors for [`Head::Linear`]).
fn adapted_tensors(
    params: &ParameterSet,
    head: Head,
    n_way: usize,
    support: &[(Prepared, usize)],
    alpha: f64,
    steps: usize,
) -> Result<(Arch, Vec<Tensor>)> {
    let arch = params.arch();
    let mut tensors = params.tensors().to_vec();
    if head == Head::Linear {
        tensors.extend(head_tensors(n_way, *arch.layer_dims.last().unwrap()));
    }
    let loss = EpisodeLoss {
        arch: &arch,
        head,
        n_way,
        support,
        targets: None,
    };
    adapt(&loss, &mut tensors, alpha, steps)?;
    Ok((arch, tensors))
}

/// Adapt a copy of `params` to `support` with `steps` Riemannian SGD steps
/// on the prototype loss. Support classes are local indices `0..n_way`.
pub fn inner_adapt(
    params: &ParameterSet,
    support: &[(Subgraph, usize)],
    alpha: f64,
    steps: usize,
) -> Result<ParameterSet> {
    if support.is_empty() {
        return Err(Error::invalid("empty support set"));
    }
    let n_way = support.iter().map(|(_, y)| y + 1).max().unwrap();
    let prepared = prepare(support);
    let (_, tensors) = adapted_tensors(params, Head::Prototype, n_way, &prepared, alpha, steps)?;
    params.with_tensors(tensors)
}

/// Query loss, accuracy and encoder gradient at the adapted parameters.
struct EpisodeOutcome {
    loss: f64,
    accuracy: f64,
    grads: GradientBundle,
}

fn run_episode(
    params: &ParameterSet,
    ep: &Episode,
    head: Head,
    alpha: f64,
    steps: usize,
) -> Result<EpisodeOutcome> {
    check_episode(ep)?;
    let support = prepare(&ep.support);
    let query = prepare(&ep.query);
    let (arch, tensors) = adapted_tensors(params, head, ep.n_way(), &support, alpha, steps)?;
    let loss = EpisodeLoss {
        arch: &arch,
        head,
        n_way: ep.n_way(),
        support: &support,
        targets: Some(&query),
    };
    let (value, grads) = evaluate_with_gradient(&loss, &tensors)?;
    let values: Vec<Vec<f64>> = tensors.iter().map(|t| t.data.clone()).collect();
    let accuracy = loss.accuracy(&values);
    let n_enc = params.tensors().len();
    let grads = GradientBundle::from_tensors(grads.tensors()[..n_enc].to_vec());
    Ok(EpisodeOutcome {
        loss: value,
        accuracy,
        grads,
    })
}

/// Batch means reported by one meta step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub loss: f64,
    pub accuracy: f64,
}

/// One first-order meta update: adapt to each episode's support, take the
/// query-loss gradient at the adapted parameters, sum over the batch in
/// batch order and apply it to `params` with the meta optimizer.
pub fn meta_step(
    params: &ParameterSet,
    batch: &[&Episode],
    opt: &mut OptimizerState,
    head: Head,
) -> Result<(ParameterSet, StepStats)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty episode batch"));
    }
    let outcomes: Vec<Result<EpisodeOutcome>> = batch
        .par_iter()
        .map(|ep| run_episode(params, ep, head, opt.alpha, opt.inner_steps))
        .collect();
    let mut total = GradientBundle::zeros_like(params.tensors());
    let (mut loss, mut acc) = (0.0, 0.0);
    for (i, out) in outcomes.into_iter().enumerate() {
        let out = out.map_err(|e| match e {
            Error::NumericalFailure(m) => Error::NumericalFailure(format!("episode {i}: {m}")),
            other => other,
        })?;
        total.add_assign(&out.grads)?;
        loss += out.loss;
        acc += out.accuracy;
    }
    let n = batch.len() as f64;
    let stats = StepStats {
        loss: loss / n,
        accuracy: acc / n,
    };
    let updated = match opt.kind {
        MetaOptimizer::Adam => riemannian_adam_step(&total, opt, params)?,
        MetaOptimizer::Sgd => {
            let mut p = params.clone();
            if opt.beta != 0.0 {
                rsgd_step(
                    p.tensors_mut(),
                    &total,
                    opt.beta,
                    params.curvature().value(),
                );
            }
            p
        }
    };
    Ok((updated, stats))
}

/// Per-episode accuracies and their summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub accuracies: Vec<f64>,
    pub summary: Summary,
}

/// Adapt a fresh copy of `params` to every episode's support for `steps`
/// steps and classify its query set.
pub fn meta_test(
    params: &ParameterSet,
    episodes: &[Episode],
    alpha: f64,
    steps: usize,
    head: Head,
) -> Result<TestMetrics> {
    if episodes.is_empty() {
        return Err(Error::invalid("no test episodes"));
    }
    let accuracies = episodes
        .par_iter()
        .map(|ep| {
            check_episode(ep)?;
            let support = prepare(&ep.support);
            let query = prepare(&ep.query);
            let (arch, tensors) =
                adapted_tensors(params, head, ep.n_way(), &support, alpha, steps)?;
            let loss = EpisodeLoss {
                arch: &arch,
                head,
                n_way: ep.n_way(),
                support: &support,
                targets: Some(&query),
            };
            let values: Vec<Vec<f64>> = tensors.iter().map(|t| t.data.clone()).collect();
            Ok(loss.accuracy(&values))
        })
        .collect::<Result<Vec<f64>>>()?;
    let summary = summarize(&accuracies);
    Ok(TestMetrics {
        accuracies,
        summary,
    })
}

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub split: LogSplit,
    /// Mean query loss; validation passes record accuracy only.
    pub loss: Option<f64>,
    pub accuracy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogSplit {
    Train,
    Val,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Snapshot with the best validation accuracy.
    pub params: ParameterSet,
    /// One record per executed meta step.
    pub log: Vec<StepRecord>,
    /// Validation passes; `step` counts meta steps completed before the pass.
    pub validation: Vec<StepRecord>,
    pub best_step: usize,
    pub best_val: f64,
}

/// Meta-train from `init` on `split.train`, validating every
/// `cfg.eval_every` steps and stopping after `cfg.patience` passes without
/// improvement. Batches are drawn with a generator seeded by `seed`.
pub fn meta_train(
    split: &MetaSplit,
    cfg: &TrainConfig,
    init: ParameterSet,
    head: Head,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::invalid("no training episodes"));
    }
    let val_eps = if split.val.is_empty() {
        &split.test
    } else {
        &split.val
    };
    let mut opt = OptimizerState::new(cfg.alpha, cfg.beta, cfg.inner_steps, cfg.optimizer)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let validate = |p: &ParameterSet| {
        meta_test(p, val_eps, cfg.alpha, cfg.test_steps, head).map(|m| m.summary.mean)
    };

    let mut params = init;
    let mut best = params.clone();
    let mut best_val = validate(&params)?;
    let mut best_step = 0;
    let mut log = Vec::with_capacity(cfg.max_meta_steps);
    let mut validation = vec![StepRecord {
        step: 0,
        split: LogSplit::Val,
        loss: None,
        accuracy: best_val,
    }];
    let mut stale = 0;
    for step in 1..=cfg.max_meta_steps {
        let k = cfg.batch_size.min(split.train.len());
        let batch: Vec<&Episode> = index::sample(&mut rng, split.train.len(), k)
            .into_iter()
            .map(|i| &split.train[i])
            .collect();
        let (next, stats) = meta_step(&params, &batch, &mut opt, head)?;
        params = next;
        log.push(StepRecord {
            step,
            split: LogSplit::Train,
            loss: Some(stats.loss),
            accuracy: stats.accuracy,
        });
        debug!(
            "meta step {step}: loss {:.4} accuracy {:.3}",
            stats.loss, stats.accuracy
        );
        if step % cfg.eval_every == 0 {
            let acc = validate(&params)?;
            validation.push(StepRecord {
                step,
                split: LogSplit::Val,
                loss: None,
                accuracy: acc,
            });
            if acc > best_val {
                best_val = acc;
                best = params.clone();
                best_step = step;
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    info!("early stop at step {step}, best validation {best_val:.3} at step {best_step}");
                    break;
                }
            }
        }
    }
    Ok(TrainOutcome {
        params: best,
        log,
        validation,
        best_step,
        best_val,
    })
}
