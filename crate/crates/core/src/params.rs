//! Named real tensors with a geometry tag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a tensor is updated by the optimizers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamGroup {
    /// Plain Euclidean entries (weight matrices); updated by subtraction.
    EuclideanTangent,
    /// A point of the Poincaré ball (biases); updated through `exp_map`.
    Manifold,
}

impl ParamGroup {
    pub fn tag(self) -> u8 {
        match self {
            ParamGroup::EuclideanTangent => 0,
            ParamGroup::Manifold => 1,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        match t {
            0 => Some(ParamGroup::EuclideanTangent),
            1 => Some(ParamGroup::Manifold),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub group: ParamGroup,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(
        name: impl Into<String>,
        shape: Vec<usize>,
        group: ParamGroup,
        data: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::invalid(format!(
                "tensor {name}: shape {shape:?} needs {n} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            name,
            shape,
            group,
            data,
        })
    }

    pub fn zeros_like(&self) -> Tensor {
        Tensor {
            name: self.name.clone(),
            shape: self.shape.clone(),
            group: self.group,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Gradients of a scalar with respect to every tensor of a parameter list,
/// in the same order and with the same shapes and group tags.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    tensors: Vec<Tensor>,
}

impl GradientBundle {
    pub fn zeros_like(params: &[Tensor]) -> Self {
        GradientBundle {
            tensors: params.iter().map(Tensor::zeros_like).collect(),
        }
    }

    pub(crate) fn from_tensors(tensors: Vec<Tensor>) -> Self {
        GradientBundle { tensors }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &GradientBundle) -> Result<()> {
        self.check_matches(&other.tensors)?;
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for t in &mut self.tensors {
            for x in &mut t.data {
                *x *= s;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| &t.data)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &GradientBundle) -> f64 {
        self.tensors
            .iter()
            .zip(&other.tensors)
            .flat_map(|(a, b)| a.data.iter().zip(&b.data))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|&x| x == 0.0))
    }

    /// Shapes, names and groups agree with `params`.
    pub fn check_matches(&self, params: &[Tensor]) -> Result<()> {
        if self.tensors.len() != params.len() {
            return Err(Error::invalid(format!(
                "gradient has {} tensors, parameters have {}",
                self.tensors.len(),
                params.len()
            )));
        }
        for (g, p) in self.tensors.iter().zip(params) {
            if g.name != p.name || g.shape != p.shape || g.group != p.group {
                return Err(Error::invalid(format!(
                    "gradient tensor {} {:?} does not match parameter {} {:?}",
                    g.name, g.shape, p.name, p.shape
                )));
            }
        }
        Ok(())
    }
}
