//! Hyperbolic graph convolution over node-centric subgraphs.
//!
//! One layer maps node states `H` to
//!
//! ```text
//! h̃ᵢ  = (W ⊗ Hᵢ) ⊕ b
//! x′ᵤ = exp₀( σ( (1/Dᵤ) Σ_{i ∈ N(u) ∪ {u}} log₀ h̃ᵢ ) )
//! ```
//!
//! with `Dᵤ = deg(u) + 1`, `σ` a tangent-space ReLU between layers and the
//! identity after the last one. Raw features are lifted with `exp₀` before
//! the first layer, and the subgraph embedding is the Einstein midpoint of
//! the final node states.
//!
//! Sums run over nodes sorted by their id in the source graph, so the
//! result does not depend on how a subgraph orders its nodes.
//!
//! ```
//! use hgram::encoder::{encode_subgraph, ParameterSet};
//! use hgram::graph::{khop_subgraph, Graph};
//!
//! let g = Graph::new(3, &[(0, 1), (1, 2)], None, vec![0, 0, 0]).unwrap();
//! let s = khop_subgraph(&g, 0, 1, 2).unwrap();
//! let params = ParameterSet::init(&[11, 8, 8], 7).unwrap();
//! let enc = encode_subgraph(&params, &s).unwrap();
//! assert_eq!(enc.node_states.len(), 3);
//! assert!(enc.pooled.norm() < 1.0);
//! ```

mod checkpoint;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use params::{Activation, Arch, ParameterSet};

use crate::error::{Error, Result};
use crate::graph::Subgraph;
use crate::hyperbolic::{ops, BallPoint, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct SubgraphEncoding {
    /// Final state of every subgraph node, in the subgraph's local order.
    pub node_states: Vec<BallPoint>,
    pub pooled: BallPoint,
}

/// Aggregation structure of a subgraph in canonical (source-id) order.
#[derive(Clone, Debug)]
pub struct Layout {
    /// Local indices sorted by source id.
    pub order: Vec<usize>,
    /// Per local node: `N(u) ∪ {u}` as local indices sorted by source id.
    pub groups: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(s: &Subgraph) -> Layout {
        let ids = s.nodes();
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by_key(|&i| ids[i]);
        let groups = (0..s.len())
            .map(|u| {
                let mut g: Vec<usize> = s.local_neighbors(u).iter().map(|&v| v as usize).collect();
                g.push(u);
                g.sort_by_key(|&i| ids[i]);
                g
            })
            .collect();
        Layout { order, groups }
    }
}

/// `(W ⊗ hᵢ) ⊕ b` for every node.
fn transform<T: Real>(
    w: &[T],
    b: &[T],
    rows: usize,
    cols: usize,
    h: &[Vec<T>],
    c: f64,
) -> Vec<Vec<T>> {
    h.iter()
        .map(|hi| ops::mobius_add(&ops::mobius_matvec(w, rows, cols, hi, c), b, c))
        .collect()
}

/// One convolution layer on node states in local order.
#[allow(clippy::too_many_arguments)]
pub fn layer_forward<T: Real>(
    w: &[T],
    b: &[T],
    rows: usize,
    cols: usize,
    layout: &Layout,
    h: &[Vec<T>],
    c: f64,
    relu: bool,
) -> Vec<Vec<T>> {
    let tangent: Vec<Vec<T>> = transform(w, b, rows, cols, h, c)
        .iter()
        .map(|x| ops::log0(x, c))
        .collect();
    let mut out = vec![Vec::new(); h.len()];
    let mut column = Vec::new();
    for &u in &layout.order {
        let group = &layout.groups[u];
        let inv = 1.0 / group.len() as f64;
        let agg: Vec<T> = (0..rows)
            .map(|j| {
                column.clear();
                column.extend(group.iter().map(|&i| tangent[i][j]));
                let mean = T::sum(&column) * inv;
                if relu {
                    mean.relu()
                } else {
                    mean
                }
            })
            .collect();
        out[u] = ops::exp0(&agg, c);
    }
    out
}

/// Full forward pass on generic scalars. `params` follow the
/// [`ParameterSet`] tensor order; `features` are raw (Euclidean) rows in
/// local order. Returns final node states and the pooled embedding.
pub fn forward<T: Real>(
    arch: &Arch,
    params: &[Vec<T>],
    layout: &Layout,
    features: &[Vec<T>],
) -> (Vec<Vec<T>>, Vec<T>) {
    let c = arch.curvature.value();
    let mut h: Vec<Vec<T>> = features.iter().map(|x| ops::exp0(x, c)).collect();
    let layers = arch.num_layers();
    for l in 0..layers {
        let relu = arch.activation == Activation::Relu && l + 1 < layers;
        h = layer_forward(
            &params[2 * l],
            &params[2 * l + 1],
            arch.layer_dims[l + 1],
            arch.layer_dims[l],
            layout,
            &h,
            c,
            relu,
        );
    }
    let refs: Vec<&[T]> = layout.order.iter().map(|&i| h[i].as_slice()).collect();
    let pooled = ops::einstein_midpoint(&refs, None, c);
    (h, pooled)
}

fn check_input(params: &ParameterSet, s: &Subgraph) -> Result<()> {
    if s.is_empty() {
        return Err(Error::invalid("cannot encode an empty subgraph"));
    }
    let m = s.features().cols();
    if m != params.layer_dims()[0] {
        return Err(Error::invalid(format!(
            "subgraph features have width {m}, encoder expects {}",
            params.layer_dims()[0]
        )));
    }
    Ok(())
}

/// Features of `s` as rows.
pub fn feature_rows(s: &Subgraph) -> Vec<Vec<f64>> {
    (0..s.len()).map(|i| s.features().row(i).to_vec()).collect()
}

/// Runs all layers and pools the final states.
pub fn encode_subgraph(params: &ParameterSet, s: &Subgraph) -> Result<SubgraphEncoding> {
    check_input(params, s)?;
    let layout = Layout::new(s);
    let values = params.values();
    let (h, pooled) = forward(&params.arch(), &values, &layout, &feature_rows(s));
    let c = params.curvature();
    Ok(SubgraphEncoding {
        node_states: h
            .into_iter()
            .map(|x| BallPoint::from_projected(x, c))
            .collect(),
        pooled: BallPoint::from_projected(pooled, c),
    })
}

/// Applies layer `layer` of `params` to node states `h` given in the local
/// order of `s`.
pub fn hgcn_layer(
    params: &ParameterSet,
    layer: usize,
    s: &Subgraph,
    h: &[BallPoint],
) -> Result<Vec<BallPoint>> {
    let arch = params.arch();
    if layer >= arch.num_layers() {
        return Err(Error::invalid(format!("layer {layer} out of range")));
    }
    if h.len() != s.len() {
        return Err(Error::invalid(format!(
            "{} states for {} nodes",
            h.len(),
            s.len()
        )));
    }
    let cols = arch.layer_dims[layer];
    if let Some(bad) = h
        .iter()
        .find(|p| p.dim() != cols || p.curvature() != arch.curvature)
    {
        return Err(Error::invalid(format!(
            "state of dimension {} does not fit layer input {cols} or the encoder curvature",
            bad.dim()
        )));
    }
    let relu = arch.activation == Activation::Relu && layer + 1 < arch.num_layers();
    let rows: Vec<Vec<f64>> = h.iter().map(|p| p.coords().to_vec()).collect();
    let values = params.values();
    let out = layer_forward(
        &values[2 * layer],
        &values[2 * layer + 1],
        arch.layer_dims[layer + 1],
        cols,
        &Layout::new(s),
        &rows,
        arch.curvature.value(),
        relu,
    );
    Ok(out
        .into_iter()
        .map(|x| BallPoint::from_projected(x, arch.curvature))
        .collect())
}
