use serde::{Deserialize, Serialize};

use crate::encoder::ParameterSet;
use crate::error::{Error, Result};
use crate::hyperbolic::ops;
use crate::params::{GradientBundle, ParamGroup, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetaOptimizer {
    /// Riemannian Adam.
    Adam,
    /// Plain Riemannian SGD with step β.
    Sgd,
}

/// Learning rates, Adam moments and step counters.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub alpha: f64,
    pub beta: f64,
    pub inner_steps: usize,
    pub kind: MetaOptimizer,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// First and second moments, one vector per tensor; empty until the
    /// first Adam step.
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(alpha: f64, beta: f64, inner_steps: usize, kind: MetaOptimizer) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite() && beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rates must be finite and non-negative, got α = {alpha}, β = {beta}"
            )));
        }
        Ok(OptimizerState {
            alpha,
            beta,
            inner_steps,
            kind,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        })
    }
}

/// Move every tensor against `step`: manifold tensors through the
/// exponential map at their current value, Euclidean ones by subtraction.
/// A zero step leaves a tensor bit-identical.
pub fn apply_step(tensors: &mut [Tensor], step: &[Vec<f64>], c: f64) {
    for (t, s) in tensors.iter_mut().zip(step) {
        if s.iter().all(|&x| x == 0.0) {
            continue;
        }
        match t.group {
            ParamGroup::EuclideanTangent => {
                for (w, d) in t.data.iter_mut().zip(s) {
                    *w -= d;
                }
            }
            ParamGroup::Manifold => {
                let v: Vec<f64> = s.iter().map(|d| -d).collect();
                t.data = ops::project(ops::exp_map(&t.data, &v, c), c);
            }
        }
    }
}

/// One Riemannian SGD step with rate `lr`. Manifold gradients are rescaled
/// by `1/λ_x²` to obtain the Riemannian gradient before the exponential map.
pub fn rsgd_step(tensors: &mut [Tensor], grads: &GradientBundle, lr: f64, c: f64) {
    let step: Vec<Vec<f64>> = tensors
        .iter()
        .zip(grads.tensors())
        .map(|(t, g)| {
            let s = match t.group {
                ParamGroup::EuclideanTangent => lr,
                ParamGroup::Manifold => {
                    let lambda: f64 = ops::conformal_factor(&t.data, c);
                    lr / (lambda * lambda)
                }
            };
            g.data.iter().map(|x| s * x).collect()
        })
        .collect();
    apply_step(tensors, &step, c);
}

/// Adam moments on raw gradients, bias-corrected; the step is applied with
/// [`apply_step`] at rate `opt.beta`.
pub fn riemannian_adam_step(
    grads: &GradientBundle,
    opt: &mut OptimizerState,
    params: &ParameterSet,
) -> Result<ParameterSet> {
    grads.check_matches(params.tensors())?;
    if opt.m.is_empty() {
        opt.m = grads
            .tensors()
            .iter()
            .map(|g| vec![0.0; g.data.len()])
            .collect();
        opt.v = opt.m.clone();
    }
    opt.t += 1;
    let bc1 = 1.0 - opt.beta1.powi(opt.t as i32);
    let bc2 = 1.0 - opt.beta2.powi(opt.t as i32);
    let mut step = Vec::with_capacity(opt.m.len());
    for ((g, m), v) in grads.tensors().iter().zip(&mut opt.m).zip(&mut opt.v) {
        let mut s = Vec::with_capacity(g.data.len());
        for ((&gi, mi), vi) in g.data.iter().zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = opt.beta1 * *mi + (1.0 - opt.beta1) * gi;
            *vi = opt.beta2 * *vi + (1.0 - opt.beta2) * gi * gi;
            let mhat = *mi / bc1;
            let vhat = *vi / bc2;
            s.push(opt.beta * mhat / (vhat.sqrt() + opt.eps));
        }
        step.push(s);
    }
    let mut out = params.clone();
    apply_step(out.tensors_mut(), &step, params.curvature().value());
    Ok(out)
}
