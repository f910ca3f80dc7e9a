//! Synthetic datasets: motifs attached to a base cycle, and motifs planted
//! in preferential-attachment graphs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{graphlet_degree_vectors, spectral_cluster_labels, Graph, GraphStore};
use crate::error::{Error, Result};

/// Number of node classes produced by [`gen_synthetic_cycle`]:
///
/// | label | nodes                                   |
/// |-------|-----------------------------------------|
/// | 0–2   | house floor, wall, roof                 |
/// | 3–4   | star center, leaf                       |
/// | 5–7   | diamond chord end, anchor, far corner   |
/// | 8–10  | fan hub, rim end, rim interior          |
/// | 11–14 | cycle node carrying a house/star/diamond/fan |
/// | 15    | plain cycle node                        |
/// | 16    | cycle node next to a carrying node      |
pub const CYCLE_LABELS: usize = 17;
const LABEL_ATTACHED: u32 = 11;
const LABEL_PLAIN: u32 = 15;
const LABEL_NEAR: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotifKind {
    House,
    Star,
    Diamond,
    Fan,
}

impl MotifKind {
    pub const ALL: [MotifKind; 4] = [
        MotifKind::House,
        MotifKind::Star,
        MotifKind::Diamond,
        MotifKind::Fan,
    ];

    fn index(self) -> u32 {
        match self {
            MotifKind::House => 0,
            MotifKind::Star => 1,
            MotifKind::Diamond => 2,
            MotifKind::Fan => 3,
        }
    }
}

/// Shape of a motif: local edges, the node joined to the host graph, and a
/// class label per node.
#[derive(Clone, Debug, PartialEq)]
pub struct MotifSpec {
    pub kind: MotifKind,
    pub size: usize,
    pub edges: Vec<(u32, u32)>,
    pub anchor: u32,
    pub labels: Vec<u32>,
}

impl MotifSpec {
    pub fn new(kind: MotifKind) -> MotifSpec {
        match kind {
            // floor 0-1, walls 2-3, roof 4
            MotifKind::House => MotifSpec {
                kind,
                size: 5,
                edges: vec![(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 4)],
                anchor: 0,
                labels: vec![0, 0, 1, 1, 2],
            },
            // center 0, leaves 1-4
            MotifKind::Star => MotifSpec {
                kind,
                size: 5,
                edges: vec![(0, 1), (0, 2), (0, 3), (0, 4)],
                anchor: 0,
                labels: vec![3, 4, 4, 4, 4],
            },
            // 4-cycle 0-1-2-3 with chord 0-2, joined at 1
            MotifKind::Diamond => MotifSpec {
                kind,
                size: 4,
                edges: vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)],
                anchor: 1,
                labels: vec![5, 6, 5, 7],
            },
            // hub 0 over the rim path 1-2-3-4
            MotifKind::Fan => MotifSpec {
                kind,
                size: 5,
                edges: vec![(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (2, 3), (3, 4)],
                anchor: 0,
                labels: vec![8, 9, 10, 10, 9],
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleConfig {
    pub n_graphs: usize,
    pub cycle_len: usize,
    pub motifs_per_graph: usize,
    pub seed: u64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            n_graphs: 10,
            cycle_len: 400,
            motifs_per_graph: 150,
            seed: 0,
        }
    }
}

/// Base cycles with motifs attached by one edge from a cycle node to the
/// motif anchor, at distinct cycle nodes. Motif kinds are balanced within
/// each graph and their positions are shuffled.
pub fn gen_synthetic_cycle(cfg: &CycleConfig) -> Result<GraphStore> {
    if cfg.cycle_len < 10 {
        return Err(Error::invalid(format!(
            "cycle length must be at least 10, got {}",
            cfg.cycle_len
        )));
    }
    if cfg.motifs_per_graph > cfg.cycle_len {
        return Err(Error::invalid(format!(
            "{} motifs do not fit on a cycle of {} nodes",
            cfg.motifs_per_graph, cfg.cycle_len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut graphs = Vec::with_capacity(cfg.n_graphs);
    for _ in 0..cfg.n_graphs {
        let l = cfg.cycle_len;
        let mut edges: Vec<(u32, u32)> = (0..l).map(|i| (i as u32, ((i + 1) % l) as u32)).collect();
        let mut labels = vec![LABEL_PLAIN; l];
        let mut positions: Vec<usize> = (0..l).collect();
        positions.shuffle(&mut rng);
        positions.truncate(cfg.motifs_per_graph);
        let mut kinds: Vec<MotifKind> = (0..cfg.motifs_per_graph)
            .map(|i| MotifKind::ALL[i % 4])
            .collect();
        kinds.shuffle(&mut rng);
        let mut attached = vec![None; l];
        for (&pos, &kind) in positions.iter().zip(&kinds) {
            attached[pos] = Some(kind);
        }
        for (pos, kind) in attached.iter().enumerate() {
            let Some(kind) = *kind else { continue };
            let spec = MotifSpec::new(kind);
            let base = labels.len() as u32;
            edges.extend(spec.edges.iter().map(|&(a, b)| (base + a, base + b)));
            edges.push((pos as u32, base + spec.anchor));
            labels.extend(&spec.labels);
        }
        for pos in 0..l {
            labels[pos] = match attached[pos] {
                Some(kind) => LABEL_ATTACHED + kind.index(),
                None if attached[(pos + 1) % l].is_some()
                    || attached[(pos + l - 1) % l].is_some() =>
                {
                    LABEL_NEAR
                }
                None => LABEL_PLAIN,
            };
        }
        graphs.push(Graph::new(labels.len(), &edges, None, labels)?);
    }
    GraphStore::new(graphs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaConfig {
    pub n_graphs: usize,
    /// Total nodes per graph, planted motifs included.
    pub nodes_per_graph: usize,
    pub attach_m: usize,
    pub n_labels: usize,
    /// Upper bound on planted motifs; at most one motif per 10 nodes is used.
    pub motifs_per_graph: usize,
    pub seed: u64,
}

impl Default for BaConfig {
    fn default() -> Self {
        BaConfig {
            n_graphs: 10,
            nodes_per_graph: 200,
            attach_m: 4,
            n_labels: 10,
            motifs_per_graph: 8,
            seed: 0,
        }
    }
}

/// Preferential-attachment graphs grown from an `(m+1)`-clique, with motifs
/// planted by an edge from each anchor to a uniformly drawn base node.
/// Labels come from spectral clustering of `ln(1 + GDV)` over all nodes of
/// all graphs jointly.
pub fn gen_synthetic_ba(cfg: &BaConfig) -> Result<GraphStore> {
    if cfg.nodes_per_graph < 20 {
        return Err(Error::invalid(format!(
            "BA graphs need at least 20 nodes, got {}",
            cfg.nodes_per_graph
        )));
    }
    if cfg.attach_m == 0 {
        return Err(Error::invalid("attachment count must be positive"));
    }
    let n_motifs = cfg.motifs_per_graph.min(cfg.nodes_per_graph / 10);
    let motif_nodes: usize = (0..n_motifs)
        .map(|i| MotifSpec::new(MotifKind::ALL[i % 4]).size)
        .sum();
    let base_n = cfg.nodes_per_graph - motif_nodes;
    if base_n < cfg.attach_m + 2 {
        return Err(Error::invalid(format!(
            "{} base nodes cannot grow a BA graph with m = {}",
            base_n, cfg.attach_m
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut skeletons = Vec::with_capacity(cfg.n_graphs);
    for _ in 0..cfg.n_graphs {
        let m = cfg.attach_m;
        let mut edges = Vec::new();
        // Every endpoint occurrence, so a uniform draw is degree-proportional.
        let mut ends: Vec<u32> = Vec::new();
        for a in 0..=m as u32 {
            for b in a + 1..=m as u32 {
                edges.push((a, b));
                ends.extend([a, b]);
            }
        }
        for u in (m + 1) as u32..base_n as u32 {
            let mut targets: Vec<u32> = Vec::with_capacity(m);
            while targets.len() < m {
                let t = ends[rng.gen_range(0..ends.len())];
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for t in targets {
                edges.push((t, u));
                ends.extend([t, u]);
            }
        }
        let mut n = base_n as u32;
        for i in 0..n_motifs {
            let spec = MotifSpec::new(MotifKind::ALL[i % 4]);
            edges.extend(spec.edges.iter().map(|&(a, b)| (n + a, n + b)));
            edges.push((rng.gen_range(0..base_n as u32), n + spec.anchor));
            n += spec.size as u32;
        }
        let g = Graph::new(n as usize, &edges, None, vec![0; n as usize])?;
        skeletons.push(g);
    }
    let mut vectors = Vec::with_capacity(cfg.n_graphs * cfg.nodes_per_graph);
    for g in &skeletons {
        for gdv in graphlet_degree_vectors(g) {
            vectors.push(
                gdv.iter()
                    .map(|&c| (c as f64).ln_1p())
                    .collect::<Vec<f64>>(),
            );
        }
    }
    let labels = spectral_cluster_labels(&vectors, cfg.n_labels, cfg.seed)?;
    let mut offset = 0;
    let mut graphs = Vec::with_capacity(skeletons.len());
    for g in skeletons {
        let n = g.num_nodes();
        graphs.push(g.with_labels(labels[offset..offset + n].to_vec())?);
        offset += n;
    }
    GraphStore::new(graphs)
}
