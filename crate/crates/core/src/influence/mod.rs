//! Node influence, graph influence and information loss of an encoder, and
//! the path-based bounds they are compared against.
//!
//! The influence of `v` on `u` is `exp_0(‖∂ log_0(h_u) / ∂ log_0(x_v)‖₂)`
//! with the Jacobian taken exactly on the tape and the spectral norm found by
//! power iteration. All maps of scalars use the radial form
//! `exp_0(r) = tanh(√c r)/√c`.
//!
//! ```
//! use hgram::encoder::{Activation, ParameterSet};
//! use hgram::graph::Graph;
//! use hgram::hyperbolic::Curvature;
//! use hgram::influence::influence_score;
//! use hgram::matrix::Matrix;
//!
//! // One node, one identity layer: the Jacobian is the identity.
//! let g = Graph::new(1, &[], Some(Matrix::from_rows(&[vec![0.2, 0.1]]).unwrap()), vec![0]).unwrap();
//! let p = ParameterSet::from_layers(
//!     vec![Matrix::identity(2)],
//!     vec![vec![0.0, 0.0]],
//!     Curvature::default(),
//!     Activation::Identity,
//! )
//! .unwrap();
//! let i = influence_score(&g, &p, 0, 0).unwrap();
//! assert!((i - 1f64.tanh()).abs() < 1e-10);
//! ```

mod verify;

pub use verify::{verify_bounds, CurvePoint, InfluenceReport, InfluenceRow, LossRow, VerifyConfig};

use crate::autodiff::{Tape, Var};
use crate::encoder::{feature_rows, forward, Layout, ParameterSet};
use crate::error::{Error, Result};
use crate::graph::{Graph, Root, Subgraph};
use crate::hyperbolic::{exp0_scalar, log0_scalar, ops};
use crate::matrix::Matrix;

/// Power-iteration tolerance for Jacobian spectral norms.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Largest graph on which simple paths are enumerated.
pub const MAX_PATH_NODES: usize = 16;

fn check_encoder(params: &ParameterSet, s: &Subgraph) -> Result<()> {
    if s.features().cols() != params.layer_dims()[0] {
        return Err(Error::invalid(format!(
            "features have width {}, encoder expects {}",
            s.features().cols(),
            params.layer_dims()[0]
        )));
    }
    Ok(())
}

/// `∂ log_0(h_root) / ∂ x_v` for every local node `v` of `s`, each a
/// `d_out × d_in` matrix, where `x_v` are the raw (tangent) input features.
pub fn root_jacobians(params: &ParameterSet, s: &Subgraph, root: usize) -> Result<Vec<Matrix>> {
    check_encoder(params, s)?;
    if root >= s.len() {
        return Err(Error::invalid(format!(
            "root index {root} outside a subgraph of {} nodes",
            s.len()
        )));
    }
    let arch = params.arch();
    let c = arch.curvature.value();
    let tape = Tape::new();
    let rows = feature_rows(s);
    let x: Vec<Vec<Var<'_>>> = rows.iter().map(|r| tape.vars(r)).collect();
    let p: Vec<Vec<Var<'_>>> = params
        .values()
        .iter()
        .map(|t| t.iter().map(|&v| Var::constant(v)).collect())
        .collect();
    let (h, _) = forward(&arch, &p, &Layout::new(s), &x);
    let out = ops::log0(&h[root], c);
    tape.check_finite()?;
    let d_in = rows[0].len();
    let mut jac = vec![Matrix::zeros(out.len(), d_in); s.len()];
    for (i, &o) in out.iter().enumerate() {
        let grads = tape.backward(o);
        for (m, xv) in jac.iter_mut().zip(&x) {
            for (j, &var) in xv.iter().enumerate() {
                m.set(i, j, grads.wrt(var));
            }
        }
    }
    Ok(jac)
}

/// Influence of every local node of `s` on `root`.
pub fn influence_row(params: &ParameterSet, s: &Subgraph, root: usize) -> Result<Vec<f64>> {
    let c = params.curvature();
    Ok(root_jacobians(params, s, root)?
        .iter()
        .map(|j| exp0_scalar(j.spectral_norm(SPECTRAL_TOL), c))
        .collect())
}

fn check_node(g: &Graph, u: u32) -> Result<()> {
    if u as usize >= g.num_nodes() {
        return Err(Error::invalid(format!(
            "node {u} not in a graph of {} nodes",
            g.num_nodes()
        )));
    }
    Ok(())
}

/// `I_uv` on the whole graph.
pub fn influence_score(g: &Graph, params: &ParameterSet, u: u32, v: u32) -> Result<f64> {
    check_node(g, u)?;
    check_node(g, v)?;
    let s = Subgraph::whole(g, 0, u)?;
    Ok(influence_row(params, &s, u as usize)?[v as usize])
}

/// Graph influence of the root of `s` over the nodes of `s`, summed in
/// ascending source-id order.
fn rooted_influence(params: &ParameterSet, s: &Subgraph) -> Result<f64> {
    let Root::Node(u) = s.root() else {
        return Err(Error::invalid("influence needs a node-rooted subgraph"));
    };
    let root = s.local_index(u).expect("root is a subgraph node");
    let row = influence_row(params, s, root)?;
    let c = params.curvature();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by_key(|&i| s.nodes()[i]);
    let total: f64 = order.iter().map(|&i| log0_scalar(row[i], c)).sum();
    Ok(exp0_scalar(total, c))
}

/// `I_G(u) = exp_0(Σ_v log_0(I_uv))` over all nodes of `g`.
pub fn graph_influence(g: &Graph, params: &ParameterSet, u: u32) -> Result<f64> {
    check_node(g, u)?;
    rooted_influence(params, &Subgraph::whole(g, 0, u)?)
}

/// `δ(G, S_u) = exp_0(log_0(I_G(u)) − log_0(I_S(u)))`. Both sums run in
/// ascending node-id order, so a subgraph that reproduces every nonzero term
/// gives exactly zero.
pub fn information_loss(g: &Graph, s: &Subgraph, params: &ParameterSet) -> Result<f64> {
    let Root::Node(u) = s.root() else {
        return Err(Error::invalid(
            "information loss needs a node-rooted subgraph",
        ));
    };
    check_node(g, u)?;
    if s.nodes().iter().any(|&v| v as usize >= g.num_nodes()) {
        return Err(Error::invalid("subgraph nodes are not part of the graph"));
    }
    let c = params.curvature();
    let whole = graph_influence(g, params, u)?;
    let local = rooted_influence(params, s)?;
    Ok(exp0_scalar(
        log0_scalar(whole, c) - log0_scalar(local, c),
        c,
    ))
}

/// Every simple path from `u` to `v`, as node sequences.
pub fn simple_paths(g: &Graph, u: u32, v: u32) -> Result<Vec<Vec<u32>>> {
    check_node(g, u)?;
    check_node(g, v)?;
    if g.num_nodes() > MAX_PATH_NODES {
        return Err(Error::invalid(format!(
            "path enumeration is limited to {MAX_PATH_NODES} nodes, graph has {}",
            g.num_nodes()
        )));
    }
    let mut out = Vec::new();
    let mut path = vec![u];
    let mut on_path = vec![false; g.num_nodes()];
    on_path[u as usize] = true;
    fn dfs(g: &Graph, v: u32, path: &mut Vec<u32>, on_path: &mut [bool], out: &mut Vec<Vec<u32>>) {
        let last = *path.last().unwrap();
        if last == v {
            out.push(path.clone());
            return;
        }
        for &w in g.neighbors(last) {
            if !on_path[w as usize] {
                on_path[w as usize] = true;
                path.push(w);
                dfs(g, v, path, on_path, out);
                path.pop();
                on_path[w as usize] = false;
            }
        }
    }
    if u != v {
        dfs(g, v, &mut path, &mut on_path, &mut out);
    }
    Ok(out)
}

/// Geometric mean of the degrees of the nodes on `path`, endpoints included.
pub fn path_degree_mean(g: &Graph, path: &[u32]) -> f64 {
    let s: f64 = path.iter().map(|&w| (g.degree(w) as f64).ln()).sum();
    (s / path.len() as f64).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    /// `I_uv ≤ exp_0(K / (D_min)^‖p_uv‖)`.
    NodeInfluence,
    /// `δ(G, S_u) ≤ exp_0(K / (D_min)^(‖p_uv‖+1))` for a subgraph of
    /// `subgraph_nodes` nodes.
    InformationLoss { subgraph_nodes: usize },
}

/// A bound together with everything needed to recompute it.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundComponents {
    pub value: f64,
    /// The constant in the numerator.
    pub k: f64,
    /// Number of simple `u`–`v` paths.
    pub n_paths: usize,
    /// Smallest path degree mean.
    pub d_min: f64,
    /// Shortest path length in edges.
    pub shortest: usize,
    /// `Π_l ‖W_l‖₂`.
    pub weight_norm_product: f64,
    /// Multiplier on the node-influence constant (`|V| − |V(S)|` for the
    /// information-loss bound, 1 otherwise).
    pub scale: f64,
    pub exponent: usize,
    /// `u` and `v` are disconnected; the value is 0 and so is the influence.
    pub vacuous: bool,
}

/// Product of the spectral norms of the encoder's weight matrices.
pub fn weight_norm_product(params: &ParameterSet) -> f64 {
    (0..params.num_layers())
        .map(|l| params.weight(l).spectral_norm(SPECTRAL_TOL))
        .product()
}

/// Path-enumeration bound for the pair `(u, v)`.
///
/// Every `u`–`v` path contributes a term whose weight factors are bounded
/// by the layer norms, so `K = m · Π_l ‖W_l‖₂` with `m` simple paths;
/// the information-loss form multiplies by the number of nodes outside the
/// subgraph.
pub fn theorem_bound(
    g: &Graph,
    params: &ParameterSet,
    u: u32,
    v: u32,
    theorem: Theorem,
) -> Result<BoundComponents> {
    if u == v {
        return Err(Error::invalid("the bound is stated for distinct nodes"));
    }
    let paths = simple_paths(g, u, v)?;
    let wn = weight_norm_product(params);
    let c = params.curvature();
    let (scale, extra) = match theorem {
        Theorem::NodeInfluence => (1.0, 0),
        Theorem::InformationLoss { subgraph_nodes } => {
            (g.num_nodes().saturating_sub(subgraph_nodes) as f64, 1)
        }
    };
    if paths.is_empty() {
        return Ok(BoundComponents {
            value: 0.0,
            k: 0.0,
            n_paths: 0,
            d_min: f64::NAN,
            shortest: 0,
            weight_norm_product: wn,
            scale,
            exponent: 0,
            vacuous: true,
        });
    }
    let d_min = paths
        .iter()
        .map(|p| path_degree_mean(g, p))
        .fold(f64::INFINITY, f64::min);
    let shortest = paths.iter().map(|p| p.len() - 1).min().unwrap();
    let k = scale * paths.len() as f64 * wn;
    let exponent = shortest + extra;
    Ok(BoundComponents {
        value: exp0_scalar(k / d_min.powi(exponent as i32), c),
        k,
        n_paths: paths.len(),
        d_min,
        shortest,
        weight_norm_product: wn,
        scale,
        exponent,
        vacuous: false,
    })
}

#[cfg(test)]
mod tests;
