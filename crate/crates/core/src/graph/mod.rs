//! Undirected graphs, node-centric subgraphs and synthetic datasets.
//!
//! ```
//! use hgram::graph::{khop_subgraph, Graph};
//!
//! // path 0 - 1 - 2 - 3
//! let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3)], None, vec![0, 1, 1, 0]).unwrap();
//! let s = khop_subgraph(&g, 0, 1, 1).unwrap();
//! assert_eq!(s.nodes(), &[1, 0, 2]);
//! assert_eq!(s.label(), 1);
//! ```

mod gdv;
mod io;
mod spectral;
mod split;
mod synth;

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use gdv::{classify_graphlet, graphlet_degree_vector, graphlet_degree_vectors, Gdv, ORBITS};
pub use io::{load_dataset, save_dataset, DatasetFormat};
pub use spectral::spectral_cluster_labels;
pub use split::{link_split, LinkSplit};
pub use synth::{
    gen_synthetic_ba, gen_synthetic_cycle, BaConfig, CycleConfig, MotifKind, MotifSpec,
    CYCLE_LABELS,
};

/// Degrees at or above this share the last one-hot slot of the default
/// features.
pub const DEGREE_CLIP: usize = 10;
/// Width of the default features: degree one-hot plus a constant 1.
pub const DEFAULT_FEATURE_DIM: usize = DEGREE_CLIP + 1;

/// Simple undirected graph with sorted adjacency lists, optional explicit
/// node features and one label per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    features: Option<Matrix>,
    labels: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    nodes: usize,
    edges: Vec<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Matrix>,
    labels: Vec<u32>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.nodes, &r.edges, r.features, r.labels)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            nodes: g.num_nodes(),
            edges: g.edges(),
            features: g.features,
            labels: g.labels,
        }
    }
}

impl Graph {
    /// Builds a graph on nodes `0..n`. Duplicate edges (in either
    /// orientation) collapse to one; self-loops and out-of-range ids are
    /// rejected. `features = None` selects the degree-based default.
    pub fn new(
        n: usize,
        edges: &[(u32, u32)],
        features: Option<Matrix>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        if labels.len() != n {
            return Err(Error::Validation(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        if let Some(f) = &features {
            if f.rows() != n {
                return Err(Error::Validation(format!(
                    "{} feature rows for {n} nodes",
                    f.rows()
                )));
            }
            if f.data().iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("non-finite node feature".into()));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop at node {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph {
            adj,
            features,
            labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        (u as usize) < self.adj.len() && self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, u: u32) -> u32 {
        self.labels[u as usize]
    }

    /// Explicit features, if any were supplied.
    pub fn explicit_features(&self) -> Option<&Matrix> {
        self.features.as_ref()
    }

    pub fn feature_dim(&self) -> usize {
        self.features
            .as_ref()
            .map_or(DEFAULT_FEATURE_DIM, Matrix::cols)
    }

    /// Feature row of `u`. Default features use the current degree.
    pub fn feature_row(&self, u: u32) -> Vec<f64> {
        self.feature_row_with_degree(u, self.degree(u))
    }

    fn feature_row_with_degree(&self, u: u32, degree: usize) -> Vec<f64> {
        match &self.features {
            Some(f) => f.row(u as usize).to_vec(),
            None => degree_features(degree),
        }
    }

    /// Copy without the given edges; explicit features and labels are kept.
    pub fn without_edges(&self, removed: &[(u32, u32)]) -> Graph {
        let mut adj = self.adj.clone();
        for &(u, v) in removed {
            adj[u as usize].retain(|&x| x != v);
            adj[v as usize].retain(|&x| x != u);
        }
        Graph {
            adj,
            features: self.features.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Same graph with the labels replaced.
    pub fn with_labels(&self, labels: Vec<u32>) -> Result<Graph> {
        if labels.len() != self.num_nodes() {
            return Err(Error::Validation(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes()
            )));
        }
        Ok(Graph {
            adj: self.adj.clone(),
            features: self.features.clone(),
            labels,
        })
    }

    /// Same graph with the features replaced.
    pub fn with_features(&self, features: Option<Matrix>) -> Result<Graph> {
        Graph::new(
            self.num_nodes(),
            &self.edges(),
            features,
            self.labels.clone(),
        )
    }

    /// Hop distances from `root` (None when unreachable).
    pub fn bfs_distances(&self, root: u32) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes()];
        dist[root as usize] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u as usize].unwrap();
            for &v in self.neighbors(u) {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Node set of the connected component containing `u`, ascending.
    pub fn component(&self, u: u32) -> Vec<u32> {
        self.bfs_distances(u)
            .iter()
            .enumerate()
            .filter_map(|(v, d)| d.map(|_| v as u32))
            .collect()
    }
}

/// One-hot of `min(degree, 10)` over degrees `1..=10` followed by a constant
/// 1. Degree 0 sets no one-hot slot.
pub fn degree_features(degree: usize) -> Vec<f64> {
    let mut row = vec![0.0; DEFAULT_FEATURE_DIM];
    if degree > 0 {
        row[degree.min(DEGREE_CLIP) - 1] = 1.0;
    }
    row[DEGREE_CLIP] = 1.0;
    row
}

/// A collection of graphs sharing one feature width and one label space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StoreRepr", into = "StoreRepr")]
pub struct GraphStore {
    graphs: Vec<Graph>,
}

#[derive(Serialize, Deserialize)]
struct StoreRepr {
    graphs: Vec<Graph>,
}

impl TryFrom<StoreRepr> for GraphStore {
    type Error = Error;
    fn try_from(r: StoreRepr) -> Result<Self> {
        GraphStore::new(r.graphs)
    }
}

impl From<GraphStore> for StoreRepr {
    fn from(s: GraphStore) -> Self {
        StoreRepr { graphs: s.graphs }
    }
}

impl GraphStore {
    pub fn new(graphs: Vec<Graph>) -> Result<Self> {
        if let Some(first) = graphs.first() {
            let m = first.feature_dim();
            if let Some(i) = graphs.iter().position(|g| g.feature_dim() != m) {
                return Err(Error::Validation(format!(
                    "graph {i} has feature width {}, graph 0 has {m}",
                    graphs[i].feature_dim()
                )));
            }
        }
        Ok(GraphStore { graphs })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn graph(&self, i: usize) -> &Graph {
        &self.graphs[i]
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn total_nodes(&self) -> usize {
        self.graphs.iter().map(Graph::num_nodes).sum()
    }

    pub fn total_edges(&self) -> usize {
        self.graphs.iter().map(Graph::num_edges).sum()
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs
            .first()
            .map_or(DEFAULT_FEATURE_DIM, Graph::feature_dim)
    }

    /// One more than the largest label present.
    pub fn num_labels(&self) -> usize {
        self.graphs
            .iter()
            .flat_map(|g| g.labels.iter())
            .max()
            .map_or(0, |&l| l as usize + 1)
    }

    /// Node count per label over all graphs.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_labels()];
        for g in &self.graphs {
            for &l in &g.labels {
                h[l as usize] += 1;
            }
        }
        h
    }
}

/// What a subgraph is centered on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Root {
    Node(u32),
    Link(u32, u32),
}

/// Induced subgraph around a root, with local copies of adjacency and
/// features. Node ids are those of the source graph; local index `i` refers
/// to `nodes()[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph {
    graph: usize,
    nodes: Vec<u32>,
    adj: Vec<Vec<u32>>,
    features: Matrix,
    root: Root,
    hops: usize,
    label: u32,
}

impl Subgraph {
    /// Assemble a subgraph from local parts. `edges` use local indices.
    pub fn from_parts(
        graph: usize,
        nodes: Vec<u32>,
        edges: &[(u32, u32)],
        features: Matrix,
        root: Root,
        hops: usize,
        label: u32,
    ) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::invalid("empty subgraph"));
        }
        if features.rows() != n {
            return Err(Error::invalid(format!(
                "{} feature rows for {n} nodes",
                features.rows()
            )));
        }
        let root_ids: &[u32] = match &root {
            Root::Node(u) => std::slice::from_ref(u),
            Root::Link(u, v) => &[*u, *v],
        };
        for r in root_ids {
            if !nodes.contains(r) {
                return Err(Error::invalid(format!("root {r} is not a subgraph node")));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n || a == b {
                return Err(Error::invalid(format!("bad local edge ({a}, {b})")));
            }
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Subgraph {
            graph,
            nodes,
            adj,
            features,
            root,
            hops,
            label,
        })
    }

    /// The whole graph as a subgraph rooted at `root` (nodes in id order).
    pub fn whole(g: &Graph, graph: usize, root: u32) -> Result<Self> {
        if root as usize >= g.num_nodes() {
            return Err(Error::invalid(format!("root {root} not in graph")));
        }
        let nodes: Vec<u32> = (0..g.num_nodes() as u32).collect();
        let features = feature_matrix(g, &nodes, None);
        Subgraph::from_parts(
            graph,
            nodes,
            &g.edges(),
            features,
            Root::Node(root),
            usize::MAX,
            g.label(root),
        )
    }

    /// Same subgraph carrying a different label.
    pub fn with_label(mut self, label: u32) -> Subgraph {
        self.label = label;
        self
    }

    pub fn graph_index(&self) -> usize {
        self.graph
    }

    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Local neighbor indices of local node `i`, ascending.
    pub fn local_neighbors(&self, i: usize) -> &[u32] {
        &self.adj[i]
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges in original ids, each as `(min, max)`, sorted.
    pub fn original_edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                if (i as u32) < j {
                    let (a, b) = (self.nodes[i], self.nodes[j as usize]);
                    out.push((a.min(b), a.max(b)));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn root(&self) -> Root {
        self.root
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn local_index(&self, id: u32) -> Option<usize> {
        self.nodes.iter().position(|&x| x == id)
    }

    /// Same subgraph with local indices reordered: new index `i` holds old
    /// index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Subgraph> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::invalid("not a permutation of the local indices"));
        }
        let mut inverse = vec![0u32; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new as u32;
        }
        let nodes = perm.iter().map(|&p| self.nodes[p]).collect();
        let rows: Vec<Vec<f64>> = perm
            .iter()
            .map(|&p| self.features.row(p).to_vec())
            .collect();
        let mut edges = Vec::new();
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                if (i as u32) < j {
                    edges.push((inverse[i], inverse[j as usize]));
                }
            }
        }
        let features = if n == 0 {
            Matrix::zeros(0, self.features.cols())
        } else {
            Matrix::from_rows(&rows)?
        };
        Subgraph::from_parts(
            self.graph, nodes, &edges, features, self.root, self.hops, self.label,
        )
    }

    /// Same subgraph with one feature row replaced.
    pub fn with_feature_row(&self, local: usize, row: &[f64]) -> Result<Subgraph> {
        if row.len() != self.features.cols() {
            return Err(Error::invalid("feature row width mismatch"));
        }
        let mut s = self.clone();
        for (j, &x) in row.iter().enumerate() {
            s.features.set(local, j, x);
        }
        Ok(s)
    }
}

fn feature_matrix(g: &Graph, nodes: &[u32], removed: Option<(u32, u32)>) -> Matrix {
    let m = g.feature_dim();
    let mut data = Vec::with_capacity(nodes.len() * m);
    for &u in nodes {
        let mut d = g.degree(u);
        if let Some((a, b)) = removed {
            if u == a || u == b {
                d -= 1;
            }
        }
        data.extend(g.feature_row_with_degree(u, d));
    }
    Matrix::new(nodes.len(), m, data).expect("feature rows have the graph's width")
}

/// Multi-source BFS up to `k` hops, visiting neighbors in ascending id
/// order. `skip` is an edge treated as absent.
fn bfs_ball(g: &Graph, roots: &[u32], k: usize, skip: Option<(u32, u32)>) -> Vec<u32> {
    let mut dist: HashMap<u32, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for &r in roots {
        if dist.insert(r, 0).is_none() {
            order.push(r);
            queue.push_back(r);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == k {
            continue;
        }
        for &v in g.neighbors(u) {
            if let Some((a, b)) = skip {
                if (u == a && v == b) || (u == b && v == a) {
                    continue;
                }
            }
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(d + 1);
                order.push(v);
                queue.push_back(v);
            }
        }
    }
    order
}

fn induced(
    g: &Graph,
    graph: usize,
    nodes: Vec<u32>,
    skip: Option<(u32, u32)>,
    root: Root,
    hops: usize,
    label: u32,
) -> Subgraph {
    let index: HashMap<u32, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i as u32))
        .collect();
    let mut adj = vec![Vec::new(); nodes.len()];
    for (i, &u) in nodes.iter().enumerate() {
        for &v in g.neighbors(u) {
            if let Some((a, b)) = skip {
                if (u == a && v == b) || (u == b && v == a) {
                    continue;
                }
            }
            if let Some(&j) = index.get(&v) {
                adj[i].push(j);
            }
        }
        adj[i].sort_unstable();
    }
    let removed = skip.filter(|&(a, b)| g.has_edge(a, b));
    let features = feature_matrix(g, &nodes, removed);
    Subgraph {
        graph,
        nodes,
        adj,
        features,
        root,
        hops,
        label,
    }
}

/// Induced subgraph on the `k`-hop ball around `root`, nodes in BFS order
/// with ties broken by ascending id. `graph` is recorded as the source index.
pub fn khop_subgraph(g: &Graph, graph: usize, root: u32, k: usize) -> Result<Subgraph> {
    if root as usize >= g.num_nodes() {
        return Err(Error::invalid(format!(
            "root {root} not in a graph of {} nodes",
            g.num_nodes()
        )));
    }
    if k == 0 {
        return Err(Error::invalid("hop count must be at least 1"));
    }
    let nodes = bfs_ball(g, &[root], k, None);
    Ok(induced(
        g,
        graph,
        nodes,
        None,
        Root::Node(root),
        k,
        g.label(root),
    ))
}

/// One `k`-hop subgraph per node of every graph, graph by graph.
pub fn partition_all(gs: &GraphStore, k: usize) -> Result<Vec<Subgraph>> {
    if k == 0 {
        return Err(Error::invalid("hop count must be at least 1"));
    }
    let roots: Vec<(usize, u32)> = gs
        .graphs()
        .iter()
        .enumerate()
        .flat_map(|(gi, g)| (0..g.num_nodes() as u32).map(move |u| (gi, u)))
        .collect();
    roots
        .par_iter()
        .map(|&(gi, u)| khop_subgraph(gs.graph(gi), gi, u, k))
        .collect()
}

/// Union of the `k`-hop balls of `u` and `v` with the `u`–`v` edge removed.
/// The label is 1 iff the edge exists in `g`.
pub fn edge_root_subgraph(g: &Graph, graph: usize, u: u32, v: u32, k: usize) -> Result<Subgraph> {
    let n = g.num_nodes();
    if u as usize >= n || v as usize >= n {
        return Err(Error::invalid(format!(
            "link ({u}, {v}) not in a graph of {n} nodes"
        )));
    }
    if u == v {
        return Err(Error::invalid(format!(
            "link root needs two distinct nodes, got ({u}, {u})"
        )));
    }
    if k == 0 {
        return Err(Error::invalid("hop count must be at least 1"));
    }
    let label = g.has_edge(u, v) as u32;
    let nodes = bfs_ball(g, &[u, v], k, Some((u, v)));
    Ok(induced(
        g,
        graph,
        nodes,
        Some((u, v)),
        Root::Link(u, v),
        k,
        label,
    ))
}
