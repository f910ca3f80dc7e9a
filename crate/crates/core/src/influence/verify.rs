use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{influence_row, information_loss, theorem_bound, Theorem};
use crate::encoder::{Activation, ParameterSet};
use crate::error::{Error, Result};
use crate::graph::{khop_subgraph, Graph, Subgraph, DEFAULT_FEATURE_DIM};
use crate::hyperbolic::Curvature;

/// Settings of a bound-verification sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub n_graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Edge probability of the Erdős–Rényi graphs (every other graph is a
    /// uniform random recursive tree).
    pub edge_prob: f64,
    /// Hidden and output widths of the encoder; the input width is the
    /// degree-feature width.
    pub hidden_dims: Vec<usize>,
    /// Radius of the subgraphs used for the information-loss bound.
    pub k_hops: usize,
    pub curvature: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_graphs: 100,
            min_nodes: 4,
            max_nodes: 12,
            edge_prob: 0.25,
            hidden_dims: vec![8, 8],
            k_hops: 1,
            curvature: 1.0,
            seed: 0,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_graphs == 0 {
            return Err(Error::invalid("n_graphs must be positive"));
        }
        if self.min_nodes < 2 || self.min_nodes > self.max_nodes || self.max_nodes > 12 {
            return Err(Error::invalid(format!(
                "graph sizes must satisfy 2 ≤ min_nodes ≤ max_nodes ≤ 12, got {}..={}",
                self.min_nodes, self.max_nodes
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::invalid(format!(
                "edge_prob {} outside [0, 1]",
                self.edge_prob
            )));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::invalid("hidden_dims must be non-empty and positive"));
        }
        Curvature::new(self.curvature)?;
        Ok(())
    }
}

/// One ordered pair of one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRow {
    pub graph: usize,
    pub tree: bool,
    pub u: u32,
    pub v: u32,
    pub influence: f64,
    /// Shortest-path length, 0 when disconnected.
    pub distance: usize,
    pub n_paths: usize,
    pub d_min: f64,
    pub k: f64,
    pub bound: f64,
    pub vacuous: bool,
    pub satisfied: bool,
}

/// Information loss of the k-hop subgraph around one root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub graph: usize,
    pub tree: bool,
    pub u: u32,
    pub subgraph_nodes: usize,
    pub loss: f64,
    /// Neighbor of `u` with the largest influence on it.
    pub v: Option<u32>,
    pub distance: usize,
    pub d_min: f64,
    pub k: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Whether the loss also stays below the bound taken at every other
    /// connected node.
    pub satisfied_all_v: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub distance: usize,
    pub mean_influence: f64,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub config: VerifyConfig,
    pub rows: Vec<InfluenceRow>,
    pub loss_rows: Vec<LossRow>,
    pub influence_violations: usize,
    pub loss_violations: usize,
    /// Roots whose loss exceeds the bound at some non-maximal `v`; reported,
    /// not counted as violations.
    pub loss_all_v_failures: usize,
    /// Mean influence by distance on the trees, identity activation.
    pub tree_curve: Vec<CurvePoint>,
    /// The same curve with ReLU between layers.
    pub relu_tree_curve: Vec<CurvePoint>,
    /// Mean influence by distance over every graph.
    pub curve: Vec<CurvePoint>,
    pub tree_curve_monotone: bool,
}

impl InfluenceReport {
    pub fn violations(&self) -> usize {
        self.influence_violations + self.loss_violations
    }

    /// Pair table as CSV.
    pub fn pairs_csv(&self) -> String {
        let mut s = String::from(
            "graph,tree,u,v,influence,distance,n_paths,d_min,k,bound,vacuous,satisfied\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{},{},{},{},{:e},{},{}",
                r.graph,
                r.tree,
                r.u,
                r.v,
                r.influence,
                r.distance,
                r.n_paths,
                r.d_min,
                r.k,
                r.bound,
                r.vacuous,
                r.satisfied
            );
        }
        s
    }

    /// Information-loss table as CSV.
    pub fn loss_csv(&self) -> String {
        let mut s = String::from(
            "graph,tree,u,subgraph_nodes,loss,v,distance,d_min,k,bound,satisfied,satisfied_all_v\n",
        );
        for r in &self.loss_rows {
            let v = r.v.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{},{},{},{},{:e},{},{}",
                r.graph,
                r.tree,
                r.u,
                r.subgraph_nodes,
                r.loss,
                v,
                r.distance,
                r.d_min,
                r.k,
                r.bound,
                r.satisfied,
                r.satisfied_all_v
            );
        }
        s
    }

    /// Distance curves as CSV, one row per (curve, distance).
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("curve,distance,mean_influence,pairs\n");
        for (name, curve) in [
            ("tree", &self.tree_curve),
            ("tree_relu", &self.relu_tree_curve),
            ("all", &self.curve),
        ] {
            for p in curve {
                let _ = writeln!(
                    s,
                    "{name},{},{:e},{}",
                    p.distance, p.mean_influence, p.pairs
                );
            }
        }
        s
    }
}

/// Uniform random recursive tree on `n` nodes.
pub fn random_tree(n: usize, rng: &mut impl Rng) -> Graph {
    let edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (rng.gen_range(0..i), i)).collect();
    Graph::new(n, &edges, None, vec![0; n]).expect("tree edges are valid")
}

/// Erdős–Rényi graph `G(n, p)`.
pub fn random_er(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, &edges, None, vec![0; n]).expect("sampled edges are valid")
}

struct GraphResult {
    rows: Vec<InfluenceRow>,
    loss_rows: Vec<LossRow>,
    all_v_failures: usize,
    relu: Vec<(usize, f64)>,
}

fn check_graph(
    gi: usize,
    tree: bool,
    g: &Graph,
    linear: &ParameterSet,
    relu: &ParameterSet,
    k_hops: usize,
) -> Result<GraphResult> {
    let n = g.num_nodes();
    let mut out = GraphResult {
        rows: Vec::new(),
        loss_rows: Vec::new(),
        all_v_failures: 0,
        relu: Vec::new(),
    };
    for u in 0..n as u32 {
        let whole = Subgraph::whole(g, gi, u)?;
        let row = influence_row(linear, &whole, u as usize)?;
        let relu_row = influence_row(relu, &whole, u as usize)?;
        let dist = g.bfs_distances(u);
        for v in 0..n as u32 {
            if v == u {
                continue;
            }
            let b = theorem_bound(g, linear, u, v, Theorem::NodeInfluence)?;
            let influence = row[v as usize];
            let d = dist[v as usize].unwrap_or(0);
            if d > 0 {
                out.relu.push((d, relu_row[v as usize]));
            }
            out.rows.push(InfluenceRow {
                graph: gi,
                tree,
                u,
                v,
                influence,
                distance: d,
                n_paths: b.n_paths,
                d_min: b.d_min,
                k: b.k,
                bound: b.value,
                vacuous: b.vacuous,
                satisfied: influence <= b.value,
            });
        }

        let s = khop_subgraph(g, gi, u, k_hops)?;
        let loss = information_loss(g, &s, linear)?;
        let which = Theorem::InformationLoss {
            subgraph_nodes: s.len(),
        };
        // Neighbor with the largest influence, ties to the smallest id.
        let best = g
            .neighbors(u)
            .iter()
            .copied()
            .fold(None::<u32>, |acc, w| match acc {
                Some(a) if row[a as usize] >= row[w as usize] => Some(a),
                _ => Some(w),
            });
        let mut all_v = true;
        for v in 0..n as u32 {
            if v != u && dist[v as usize].is_some() {
                let b = theorem_bound(g, linear, u, v, which)?;
                all_v &= loss <= b.value;
            }
        }
        if !all_v {
            out.all_v_failures += 1;
        }
        let loss_row = match best {
            Some(v) => {
                let b = theorem_bound(g, linear, u, v, which)?;
                LossRow {
                    graph: gi,
                    tree,
                    u,
                    subgraph_nodes: s.len(),
                    loss,
                    v: Some(v),
                    distance: b.shortest,
                    d_min: b.d_min,
                    k: b.k,
                    bound: b.value,
                    satisfied: loss <= b.value,
                    satisfied_all_v: all_v,
                }
            }
            // An isolated root is its own component, so nothing is lost.
            None => LossRow {
                graph: gi,
                tree,
                u,
                subgraph_nodes: s.len(),
                loss,
                v: None,
                distance: 0,
                d_min: f64::NAN,
                k: 0.0,
                bound: 0.0,
                satisfied: loss <= 0.0,
                satisfied_all_v: all_v,
            },
        };
        out.loss_rows.push(loss_row);
    }
    Ok(out)
}

fn curve(points: impl Iterator<Item = (usize, f64)>) -> Vec<CurvePoint> {
    let mut buckets: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (d, x) in points {
        let e = buckets.entry(d).or_insert((0.0, 0));
        e.0 += x;
        e.1 += 1;
    }
    buckets
        .into_iter()
        .map(|(distance, (sum, pairs))| CurvePoint {
            distance,
            mean_influence: sum / pairs as f64,
            pairs,
        })
        .collect()
}

/// Non-increasing everywhere and strictly decreasing while positive.
pub fn is_decreasing(curve: &[CurvePoint]) -> bool {
    curve.windows(2).all(|w| {
        let (a, b) = (w[0].mean_influence, w[1].mean_influence);
        if b > 0.0 {
            b < a
        } else {
            b <= a
        }
    })
}

/// Samples random trees and Erdős–Rényi graphs and checks every ordered pair
/// against the node-influence bound and every root against the
/// information-loss bound, using an identity-activation encoder with zero
/// biases.
pub fn verify_bounds(cfg: &VerifyConfig) -> Result<InfluenceReport> {
    cfg.validate()?;
    let c = Curvature::new(cfg.curvature)?;
    let mut dims = vec![DEFAULT_FEATURE_DIM];
    dims.extend(&cfg.hidden_dims);
    let linear = ParameterSet::init_with(&dims, c, Activation::Identity, cfg.seed)?;
    let relu = linear.with_activation(Activation::Relu);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let graphs: Vec<(bool, Graph)> = (0..cfg.n_graphs)
        .map(|i| {
            let n = rng.gen_range(cfg.min_nodes..=cfg.max_nodes);
            let tree = i % 2 == 0;
            let g = if tree {
                random_tree(n, &mut rng)
            } else {
                random_er(n, cfg.edge_prob, &mut rng)
            };
            (tree, g)
        })
        .collect();

    let results: Vec<GraphResult> = graphs
        .par_iter()
        .enumerate()
        .map(|(gi, (tree, g))| check_graph(gi, *tree, g, &linear, &relu, cfg.k_hops))
        .collect::<Result<_>>()?;

    let mut report = InfluenceReport {
        config: cfg.clone(),
        rows: Vec::new(),
        loss_rows: Vec::new(),
        influence_violations: 0,
        loss_violations: 0,
        loss_all_v_failures: 0,
        tree_curve: Vec::new(),
        relu_tree_curve: Vec::new(),
        curve: Vec::new(),
        tree_curve_monotone: false,
    };
    let mut relu_points = Vec::new();
    for (r, (tree, _)) in results.into_iter().zip(&graphs) {
        report.loss_all_v_failures += r.all_v_failures;
        if *tree {
            relu_points.extend(r.relu);
        }
        report.rows.extend(r.rows);
        report.loss_rows.extend(r.loss_rows);
    }
    report.influence_violations = report.rows.iter().filter(|r| !r.satisfied).count();
    report.loss_violations = report.loss_rows.iter().filter(|r| !r.satisfied).count();
    let connected = |r: &&InfluenceRow| r.distance > 0;
    report.tree_curve = curve(
        report
            .rows
            .iter()
            .filter(|r| r.tree)
            .filter(connected)
            .map(|r| (r.distance, r.influence)),
    );
    report.curve = curve(
        report
            .rows
            .iter()
            .filter(connected)
            .map(|r| (r.distance, r.influence)),
    );
    report.relu_tree_curve = curve(relu_points.into_iter());
    report.tree_curve_monotone = is_decreasing(&report.tree_curve);
    Ok(report)
}
