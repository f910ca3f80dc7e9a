use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{ops, BallPoint, Curvature};
use crate::matrix::Matrix;
use crate::params::{ParamGroup, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Tangent-space ReLU between layers.
    Relu,
    /// No nonlinearity; the encoder is linear in tangent space when biases
    /// sit at the origin.
    Identity,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        match t {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Shape information of an encoder, without the tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Arch {
    pub layer_dims: Vec<usize>,
    pub curvature: Curvature,
    pub activation: Activation,
}

impl Arch {
    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }
}

/// Trainable encoder tensors: per layer `layer{l}.weight` (a
/// `d_{l+1} × d_l` matrix, Euclidean) and `layer{l}.bias` (a ball point).
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    tensors: Vec<Tensor>,
    arch: Arch,
}

pub(crate) fn weight_name(l: usize) -> String {
    format!("layer{l}.weight")
}

pub(crate) fn bias_name(l: usize) -> String {
    format!("layer{l}.bias")
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::invalid(format!(
            "need at least two positive layer dimensions, got {dims:?}"
        )));
    }
    Ok(())
}

impl ParameterSet {
    /// Glorot-uniform weights, biases at the origin, curvature 1, ReLU.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        Self::init_with(layer_dims, Curvature::default(), Activation::Relu, seed)
    }

    pub fn init_with(
        layer_dims: &[usize],
        curvature: Curvature,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        check_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = Vec::new();
        for l in 0..layer_dims.len() - 1 {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-a..=a))
                .collect();
            tensors.push(Tensor::new(
                weight_name(l),
                vec![fan_out, fan_in],
                ParamGroup::EuclideanTangent,
                w,
            )?);
            tensors.push(Tensor::new(
                bias_name(l),
                vec![fan_out],
                ParamGroup::Manifold,
                vec![0.0; fan_out],
            )?);
        }
        Ok(ParameterSet {
            tensors,
            arch: Arch {
                layer_dims: layer_dims.to_vec(),
                curvature,
                activation,
            },
        })
    }

    /// Explicit weights and biases; `biases[l]` must lie inside the ball.
    pub fn from_layers(
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        curvature: Curvature,
        activation: Activation,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::invalid(
                "need one bias per weight matrix and at least one layer",
            ));
        }
        let mut dims = vec![weights[0].cols()];
        let mut tensors = Vec::new();
        for (l, (w, b)) in weights.into_iter().zip(biases).enumerate() {
            if w.cols() != dims[l] {
                return Err(Error::invalid(format!(
                    "layer {l} weight has {} columns, previous layer outputs {}",
                    w.cols(),
                    dims[l]
                )));
            }
            dims.push(w.rows());
            tensors.push(Tensor::new(
                weight_name(l),
                vec![w.rows(), w.cols()],
                ParamGroup::EuclideanTangent,
                w.data().to_vec(),
            )?);
            tensors.push(Tensor::new(
                bias_name(l),
                vec![w.rows()],
                ParamGroup::Manifold,
                b,
            )?);
        }
        ParameterSet::from_tensors(
            tensors,
            Arch {
                layer_dims: dims,
                curvature,
                activation,
            },
        )
    }

    /// Validates names, shapes, groups, finiteness and the ball invariant.
    pub fn from_tensors(tensors: Vec<Tensor>, arch: Arch) -> Result<Self> {
        check_dims(&arch.layer_dims)?;
        let layers = arch.num_layers();
        if tensors.len() != 2 * layers {
            return Err(Error::Validation(format!(
                "{} tensors for {layers} layers",
                tensors.len()
            )));
        }
        for l in 0..layers {
            let (d_in, d_out) = (arch.layer_dims[l], arch.layer_dims[l + 1]);
            let expect = [
                (
                    weight_name(l),
                    vec![d_out, d_in],
                    ParamGroup::EuclideanTangent,
                ),
                (bias_name(l), vec![d_out], ParamGroup::Manifold),
            ];
            for (t, (name, shape, group)) in tensors[2 * l..2 * l + 2].iter().zip(expect) {
                if t.name != name || t.shape != shape || t.group != group {
                    return Err(Error::Validation(format!(
                        "tensor {} {:?} ({:?}) does not match expected {name} {shape:?} ({group:?})",
                        t.name, t.shape, t.group
                    )));
                }
                if t.data.len() != shape.iter().product::<usize>()
                    || t.data.iter().any(|x| !x.is_finite())
                {
                    return Err(Error::Validation(format!(
                        "tensor {name} has bad or non-finite entries"
                    )));
                }
            }
            let b = &tensors[2 * l + 1].data;
            if ops::norm(b) * arch.curvature.value().sqrt() >= 1.0 {
                return Err(Error::Validation(format!(
                    "bias {} lies outside the ball",
                    bias_name(l)
                )));
            }
        }
        Ok(ParameterSet { tensors, arch })
    }

    /// Same architecture with new tensor values (validated).
    pub fn with_tensors(&self, tensors: Vec<Tensor>) -> Result<Self> {
        ParameterSet::from_tensors(tensors, self.arch.clone())
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    /// Tensor data in order, as the encoder's generic forward expects.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.tensors.iter().map(|t| t.data.clone()).collect()
    }

    pub fn arch(&self) -> Arch {
        self.arch.clone()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.arch.layer_dims
    }

    pub fn num_layers(&self) -> usize {
        self.arch.num_layers()
    }

    pub fn curvature(&self) -> Curvature {
        self.arch.curvature
    }

    pub fn activation(&self) -> Activation {
        self.arch.activation
    }

    pub fn with_activation(&self, activation: Activation) -> ParameterSet {
        let mut p = self.clone();
        p.arch.activation = activation;
        p
    }

    pub fn weight(&self, l: usize) -> Matrix {
        let t = &self.tensors[2 * l];
        Matrix::new(t.shape[0], t.shape[1], t.data.clone()).expect("weight shape is validated")
    }

    pub fn bias(&self, l: usize) -> BallPoint {
        BallPoint::from_projected(self.tensors[2 * l + 1].data.clone(), self.arch.curvature)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bit pattern digest, used to check that a copy was left untouched.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for t in &self.tensors {
            t.name.hash(&mut h);
            t.shape.hash(&mut h);
            for x in &t.data {
                x.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}
