use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{evaluate, evaluate_with_gradient, Objective};
use crate::error::{Error, Result};
use crate::params::Tensor;

/// Coordinates sampled per tensor.
pub const MAX_COORDS: usize = 200;
/// Analytic gradients at or below this magnitude are judged by absolute error.
pub const SMALL_GRADIENT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct FdEntry {
    pub name: String,
    pub checked: usize,
    /// Worst `|g − g_fd| / max(|g|, |g_fd|)` over coordinates with
    /// `|g| > SMALL_GRADIENT`.
    pub max_rel_error: f64,
    /// Worst `|g − g_fd|` over coordinates with `|g| ≤ SMALL_GRADIENT`.
    pub max_abs_error_small: f64,
    /// Worst `|g − g_fd|` over all checked coordinates.
    pub max_abs_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
}

impl FdReport {
    pub fn passes(&self, rel_tol: f64, abs_tol: f64) -> bool {
        self.entries
            .iter()
            .all(|e| e.max_rel_error <= rel_tol && e.max_abs_error_small <= abs_tol)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_abs_error)
            .fold(0.0, f64::max)
    }
}

/// Compare reverse-mode gradients with central differences
/// `(f(θ + h eᵢ) − f(θ − h eᵢ)) / 2h` on up to [`MAX_COORDS`] coordinates per
/// tensor, chosen at random from `seed`.
pub fn finite_difference_check<O: Objective>(
    program: &O,
    params: &[Tensor],
    step: f64,
    seed: u64,
) -> Result<FdReport> {
    if step.is_nan() || step <= 0.0 || !step.is_finite() {
        return Err(Error::invalid(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let (_, grads) = evaluate_with_gradient(program, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work: Vec<Tensor> = params.to_vec();
    let mut entries = Vec::with_capacity(params.len());
    for ti in 0..params.len() {
        let n = params[ti].len();
        let mut coords: Vec<usize> = if n <= MAX_COORDS {
            (0..n).collect()
        } else {
            sample(&mut rng, n, MAX_COORDS).into_vec()
        };
        coords.sort_unstable();
        let mut entry = FdEntry {
            name: params[ti].name.clone(),
            checked: coords.len(),
            max_rel_error: 0.0,
            max_abs_error_small: 0.0,
            max_abs_error: 0.0,
        };
        for &i in &coords {
            let orig = params[ti].data[i];
            work[ti].data[i] = orig + step;
            let plus = scalar(program, &work)?;
            work[ti].data[i] = orig - step;
            let minus = scalar(program, &work)?;
            work[ti].data[i] = orig;
            let fd = (plus - minus) / (2.0 * step);
            let g = grads.tensors()[ti].data[i];
            let err = (g - fd).abs();
            entry.max_abs_error = entry.max_abs_error.max(err);
            if g.abs() <= SMALL_GRADIENT {
                entry.max_abs_error_small = entry.max_abs_error_small.max(err);
            } else {
                entry.max_rel_error = entry.max_rel_error.max(err / g.abs().max(fd.abs()));
            }
        }
        entries.push(entry);
    }
    Ok(FdReport { entries })
}

fn scalar<O: Objective>(program: &O, params: &[Tensor]) -> Result<f64> {
    let out = evaluate(program, params)?;
    match out.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::invalid(format!(
            "objective must produce a single scalar, got {} outputs",
            out.len()
        ))),
    }
}
