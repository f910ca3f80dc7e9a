//! Reverse-mode differentiation.
//!
//! Computations are written once, generically over [`Real`], and run either
//! on `f64` or on tape variables ([`Var`]). Because both instantiations
//! perform the same floating-point operations in the same order, the loss
//! reported by [`evaluate_with_gradient`] is bit-identical to a plain
//! forward evaluation.
//!
//! ```
//! use hgram::autodiff::{evaluate_with_gradient, Objective};
//! use hgram::hyperbolic::Real;
//! use hgram::params::{ParamGroup, Tensor};
//! use hgram::Result;
//!
//! // ‖θ‖² has gradient 2θ.
//! struct SquaredNorm;
//! impl Objective for SquaredNorm {
//!     fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
//!         Ok(vec![T::dot(&params[0], &params[0])])
//!     }
//! }
//!
//! let theta = Tensor::new("theta", vec![2], ParamGroup::EuclideanTangent, vec![0.5, -1.5]).unwrap();
//! let (loss, grads) = evaluate_with_gradient(&SquaredNorm, &[theta]).unwrap();
//! assert_eq!(loss, 2.5);
//! assert_eq!(grads.tensors()[0].data, vec![1.0, -3.0]);
//! ```

mod check;
mod tape;

pub use check::{finite_difference_check, FdEntry, FdReport};
pub use tape::{Gradients, Op, Tape, Var};

use crate::error::{Error, Result};
use crate::hyperbolic::Real;
use crate::params::{GradientBundle, Tensor};

/// A computation parameterized by a list of tensors.
///
/// `params` arrive in the order of the tensor list handed to
/// [`evaluate_with_gradient`]; inputs (graphs, labels) live in `self`.
pub trait Objective {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>>;
}

/// Plain `f64` forward pass.
pub fn evaluate<O: Objective>(program: &O, params: &[Tensor]) -> Result<Vec<f64>> {
    let values: Vec<Vec<f64>> = params.iter().map(|t| t.data.clone()).collect();
    program.evaluate(&values)
}

/// Scalar loss and its gradient with respect to every tensor in `params`.
pub fn evaluate_with_gradient<O: Objective>(
    program: &O,
    params: &[Tensor],
) -> Result<(f64, GradientBundle)> {
    let tape = Tape::new();
    let leaves: Vec<Vec<Var<'_>>> = params.iter().map(|t| tape.vars(&t.data)).collect();
    let out = program.evaluate(&leaves)?;
    if out.len() != 1 {
        return Err(Error::invalid(format!(
            "objective must produce a single scalar, got {} outputs",
            out.len()
        )));
    }
    tape.check_finite()?;
    let root = out[0];
    let loss = root.value();
    let grads = tape.backward(root);
    let mut tensors = Vec::with_capacity(params.len());
    for (t, vars) in params.iter().zip(&leaves) {
        let data = grads.wrt_all(vars);
        if let Some(i) = data.iter().position(|g| !g.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite gradient at {}[{i}]",
                t.name
            )));
        }
        tensors.push(Tensor {
            name: t.name.clone(),
            shape: t.shape.clone(),
            group: t.group,
            data,
        });
    }
    Ok((loss, GradientBundle::from_tensors(tensors)))
}

#[cfg(test)]
mod tests;
