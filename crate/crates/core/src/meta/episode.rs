use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use log::warn;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    edge_root_subgraph, khop_subgraph, link_split, Graph, GraphStore, LinkSplit, Subgraph,
};

/// Share of each graph's edges used for support links; the rest is held out
/// for queries.
pub const LINK_SUPPORT_FRACTION: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setup {
    /// Single graph, shared labels.
    #[serde(rename = "sg-sl")]
    SgSl,
    /// Single graph, disjoint labels.
    #[serde(rename = "sg-dl")]
    SgDl,
    /// Multiple graphs, shared labels.
    #[serde(rename = "mg-sl")]
    MgSl,
    /// Multiple graphs, disjoint labels.
    #[serde(rename = "mg-dl")]
    MgDl,
}

impl Setup {
    pub fn single_graph(self) -> bool {
        matches!(self, Setup::SgSl | Setup::SgDl)
    }

    pub fn disjoint_labels(self) -> bool {
        matches!(self, Setup::SgDl | Setup::MgDl)
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setup::SgSl => "sg-sl",
            Setup::SgDl => "sg-dl",
            Setup::MgSl => "mg-sl",
            Setup::MgDl => "mg-dl",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Node,
    Link,
}

/// One few-shot task. Classes in `support` and `query` are local indices
/// into `classes`, which holds the dataset class ids (for link tasks 0 is a
/// non-edge and 1 an edge).
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub support: Vec<(Subgraph, usize)>,
    pub query: Vec<(Subgraph, usize)>,
    pub classes: Vec<u32>,
}

impl Episode {
    pub fn n_way(&self) -> usize {
        self.classes.len()
    }

    /// Digest of the episode's membership (graph, root, class per example).
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.classes.hash(&mut h);
        for (s, y) in self.support.iter().chain(&self.query) {
            s.graph_index().hash(&mut h);
            s.root().hash(&mut h);
            y.hash(&mut h);
        }
        h.finish()
    }
}

/// Episode construction parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub setup: Setup,
    pub task: Task,
    pub n_way: usize,
    pub shots: usize,
    /// Query examples per class (fewer if a class runs short; episodes stay
    /// balanced).
    pub queries: usize,
    pub k_hops: usize,
    pub train_episodes: usize,
    pub val_episodes: usize,
    pub test_episodes: usize,
    pub n_folds: usize,
    pub fold: usize,
    /// Source graph for single-graph setups.
    pub graph: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            setup: Setup::SgDl,
            task: Task::Node,
            n_way: 2,
            shots: 2,
            queries: 8,
            k_hops: 2,
            train_episodes: 400,
            val_episodes: 16,
            test_episodes: 50,
            n_folds: 5,
            fold: 0,
            graph: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaSplit {
    pub setup: Setup,
    pub task: Task,
    pub train: Vec<Episode>,
    pub val: Vec<Episode>,
    pub test: Vec<Episode>,
    /// Dataset classes each part may draw from.
    pub train_classes: Vec<u32>,
    pub val_classes: Vec<u32>,
    pub test_classes: Vec<u32>,
    /// Graphs each part draws from.
    pub train_graphs: Vec<usize>,
    pub val_graphs: Vec<usize>,
    pub test_graphs: Vec<usize>,
}

/// Split `items` into `chunks` contiguous near-equal parts and return
/// (test, val, train) for `fold`. Validation reuses the training part when
/// fewer than three chunks exist.
fn fold_parts<T: Clone>(items: &[T], chunks: usize, fold: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let bounds: Vec<usize> = (0..=chunks).map(|i| i * items.len() / chunks).collect();
    let part = |i: usize| items[bounds[i]..bounds[i + 1]].to_vec();
    let test_i = fold % chunks;
    let test = part(test_i);
    if chunks < 3 {
        let train: Vec<T> = (0..chunks)
            .filter(|&i| i != test_i)
            .flat_map(part)
            .collect();
        return (test, train.clone(), train);
    }
    let val_i = (fold + 1) % chunks;
    let train = (0..chunks)
        .filter(|&i| i != test_i && i != val_i)
        .flat_map(part)
        .collect();
    (test, part(val_i), train)
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    (seed, salt).hash(&mut h);
    h.finish()
}

type Pool = BTreeMap<u32, Vec<(usize, u32)>>;

fn node_pool(
    gs: &GraphStore,
    graphs: &[usize],
    nodes: Option<&[u32]>,
    classes: Option<&[u32]>,
) -> Pool {
    let mut pool = Pool::new();
    for &gi in graphs {
        let g = gs.graph(gi);
        let all: Vec<u32>;
        let ids = match nodes {
            Some(ns) => ns,
            None => {
                all = (0..g.num_nodes() as u32).collect();
                &all
            }
        };
        for &u in ids {
            let y = g.label(u);
            if classes.is_none_or(|cs| cs.contains(&y)) {
                pool.entry(y).or_default().push((gi, u));
            }
        }
    }
    pool
}

fn eligible(pool: &Pool, need: usize) -> Vec<u32> {
    pool.iter()
        .filter(|(_, m)| m.len() >= need)
        .map(|(&y, _)| y)
        .collect()
}

fn sample_node_episode(
    gs: &GraphStore,
    pool: &Pool,
    classes: &[u32],
    cfg: &SplitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    let mut chosen: Vec<u32> = index::sample(rng, classes.len(), cfg.n_way)
        .into_iter()
        .map(|i| classes[i])
        .collect();
    chosen.sort_unstable();
    let q = chosen
        .iter()
        .map(|y| pool[y].len() - cfg.shots)
        .min()
        .unwrap_or(0)
        .min(cfg.queries);
    let mut support = Vec::new();
    let mut query = Vec::new();
    for (local, y) in chosen.iter().enumerate() {
        let members = &pool[y];
        let picks = index::sample(rng, members.len(), cfg.shots + q);
        for (j, i) in picks.into_iter().enumerate() {
            let (gi, u) = members[i];
            let s = khop_subgraph(gs.graph(gi), gi, u, cfg.k_hops)?;
            if j < cfg.shots {
                support.push((s, local));
            } else {
                query.push((s, local));
            }
        }
    }
    Ok(Episode {
        support,
        query,
        classes: chosen,
    })
}

fn check_config(gs: &GraphStore, cfg: &SplitConfig) -> Result<()> {
    if gs.is_empty() {
        return Err(Error::invalid("dataset has no graphs"));
    }
    if cfg.n_way < 2 || cfg.shots == 0 || cfg.queries == 0 || cfg.k_hops == 0 {
        return Err(Error::invalid(
            "n_way must be at least 2 and shots, queries and k_hops positive",
        ));
    }
    if cfg.n_folds == 0 || cfg.fold >= cfg.n_folds {
        return Err(Error::invalid(format!(
            "fold {} outside 0..{}",
            cfg.fold, cfg.n_folds
        )));
    }
    if cfg.setup.single_graph() && cfg.graph >= gs.len() {
        return Err(Error::invalid(format!(
            "graph {} requested but the dataset has {} graphs",
            cfg.graph,
            gs.len()
        )));
    }
    if cfg.train_episodes == 0 || cfg.test_episodes == 0 {
        return Err(Error::invalid(
            "need at least one training and one test episode",
        ));
    }
    Ok(())
}

/// Build training, validation and test episodes for one fold.
///
/// Disjoint-label setups partition the usable classes into folds; shared
/// labels partition nodes (single graph) or whole graphs (multiple graphs).
/// Everything is a deterministic function of `(gs, cfg, seed)`.
pub fn make_meta_split(gs: &GraphStore, cfg: &SplitConfig, seed: u64) -> Result<MetaSplit> {
    check_config(gs, cfg)?;
    match cfg.task {
        Task::Node => node_split(gs, cfg, seed),
        Task::Link => link_split_episodes(gs, cfg, seed),
    }
}

fn graph_parts(
    gs: &GraphStore,
    cfg: &SplitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if cfg.setup.single_graph() {
        let g = vec![cfg.graph];
        return Ok((g.clone(), g.clone(), g));
    }
    if gs.len() < 2 {
        return Err(Error::invalid(format!(
            "multi-graph setups need at least 2 graphs, dataset has {}",
            gs.len()
        )));
    }
    let mut ids: Vec<usize> = (0..gs.len()).collect();
    ids.shuffle(rng);
    Ok(fold_parts(&ids, cfg.n_folds.min(gs.len()), cfg.fold))
}

fn node_split(gs: &GraphStore, cfg: &SplitConfig, seed: u64) -> Result<MetaSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let need = cfg.shots + 1;
    let (test_g, val_g, train_g) = graph_parts(gs, cfg, &mut rng)?;
    let mut all_graphs: Vec<usize> = test_g
        .iter()
        .chain(&val_g)
        .chain(&train_g)
        .copied()
        .collect();
    all_graphs.sort_unstable();
    all_graphs.dedup();

    let (pools, classes) = if cfg.setup.disjoint_labels() {
        let whole = node_pool(gs, &all_graphs, None, None);
        let usable = eligible(&whole, need);
        let dropped = whole.len() - usable.len();
        if dropped > 0 {
            warn!("{dropped} classes have fewer than {need} nodes and are left out");
        }
        if usable.len() < 2 * cfg.n_way {
            return Err(Error::invalid(format!(
                "disjoint-label {}-way episodes need at least {} classes with {need}+ nodes, found {}",
                cfg.n_way,
                2 * cfg.n_way,
                usable.len()
            )));
        }
        let mut shuffled = usable;
        shuffled.shuffle(&mut rng);
        let chunks = cfg.n_folds.min(shuffled.len() / cfg.n_way).max(2);
        let (mut test_c, mut val_c, mut train_c) = fold_parts(&shuffled, chunks, cfg.fold);
        test_c.sort_unstable();
        val_c.sort_unstable();
        train_c.sort_unstable();
        let pools = [
            node_pool(gs, &train_g, None, Some(&train_c)),
            node_pool(gs, &val_g, None, Some(&val_c)),
            node_pool(gs, &test_g, None, Some(&test_c)),
        ];
        (pools, [train_c, val_c, test_c])
    } else if cfg.setup.single_graph() {
        let mut nodes: Vec<u32> = (0..gs.graph(cfg.graph).num_nodes() as u32).collect();
        nodes.shuffle(&mut rng);
        let (test_n, val_n, train_n) = fold_parts(&nodes, cfg.n_folds.max(2), cfg.fold);
        let g = [cfg.graph];
        let pools = [
            node_pool(gs, &g, Some(&train_n), None),
            node_pool(gs, &g, Some(&val_n), None),
            node_pool(gs, &g, Some(&test_n), None),
        ];
        let classes = [
            eligible(&pools[0], need),
            eligible(&pools[1], need),
            eligible(&pools[2], need),
        ];
        (pools, classes)
    } else {
        let pools = [
            node_pool(gs, &train_g, None, None),
            node_pool(gs, &val_g, None, None),
            node_pool(gs, &test_g, None, None),
        ];
        let classes = [
            eligible(&pools[0], need),
            eligible(&pools[1], need),
            eligible(&pools[2], need),
        ];
        (pools, classes)
    };

    for (name, cs) in ["training", "validation", "test"].iter().zip(&classes) {
        if cs.len() < cfg.n_way {
            return Err(Error::invalid(format!(
                "{name} part has {} classes with {need}+ nodes, {}-way episodes need {}",
                cs.len(),
                cfg.n_way,
                cfg.n_way
            )));
        }
    }

    let mut episodes = Vec::new();
    for (part, count) in [cfg.train_episodes, cfg.val_episodes, cfg.test_episodes]
        .into_iter()
        .enumerate()
    {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, 10 + part as u64 + 100 * cfg.fold as u64));
        let eps = (0..count)
            .map(|_| sample_node_episode(gs, &pools[part], &classes[part], cfg, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        episodes.push(eps);
    }
    let test = episodes.pop().unwrap();
    let val = episodes.pop().unwrap();
    let train = episodes.pop().unwrap();
    let [train_classes, val_classes, test_classes] = classes;
    Ok(MetaSplit {
        setup: cfg.setup,
        task: cfg.task,
        train,
        val,
        test,
        train_classes,
        val_classes,
        test_classes,
        train_graphs: train_g,
        val_graphs: val_g,
        test_graphs: test_g,
    })
}

/// Per-graph link data: the observed graph (query positives removed) and
/// the positive/negative pairs each part may draw from.
struct LinkGraph {
    observed: Graph,
    support: [Vec<(u32, u32)>; 2],
    query: [Vec<(u32, u32)>; 2],
}

fn sample_link_episode(
    gi: usize,
    lg: &LinkGraph,
    cfg: &SplitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    let q = cfg.queries.min(lg.query[0].len()).min(lg.query[1].len());
    let mut support = Vec::new();
    let mut query = Vec::new();
    for class in 0..2 {
        for i in index::sample(rng, lg.support[class].len(), cfg.shots) {
            let (u, v) = lg.support[class][i];
            let s =
                edge_root_subgraph(&lg.observed, gi, u, v, cfg.k_hops)?.with_label(class as u32);
            support.push((s, class));
        }
        for i in index::sample(rng, lg.query[class].len(), q) {
            let (u, v) = lg.query[class][i];
            let s =
                edge_root_subgraph(&lg.observed, gi, u, v, cfg.k_hops)?.with_label(class as u32);
            query.push((s, class));
        }
    }
    Ok(Episode {
        support,
        query,
        classes: vec![0, 1],
    })
}

fn link_graph(g: &Graph, split: &LinkSplit, query: [Vec<(u32, u32)>; 2]) -> LinkGraph {
    LinkGraph {
        observed: g.without_edges(&split.query_pos),
        support: [split.support_neg.clone(), split.support_pos.clone()],
        query,
    }
}

fn link_split_episodes(gs: &GraphStore, cfg: &SplitConfig, seed: u64) -> Result<MetaSplit> {
    if cfg.setup.disjoint_labels() {
        return Err(Error::invalid(
            "link prediction has a single label pair, use a shared-label setup",
        ));
    }
    if cfg.n_way != 2 {
        return Err(Error::invalid(format!(
            "link episodes are 2-way, got n_way = {}",
            cfg.n_way
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let (test_g, val_g, train_g) = graph_parts(gs, cfg, &mut rng)?;
    let parts = [&train_g, &val_g, &test_g];
    let mut per_part: Vec<Vec<(usize, LinkGraph)>> = vec![Vec::new(), Vec::new(), Vec::new()];
    if cfg.setup.single_graph() {
        let g = gs.graph(cfg.graph);
        let split = link_split(
            g,
            LINK_SUPPORT_FRACTION,
            derive_seed(seed, 3 + cfg.graph as u64),
        )?;
        let mut pos = split.query_pos.clone();
        let mut neg = split.query_neg.clone();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let chunks = cfg.n_folds.max(2);
        let (tp, vp, rp) = fold_parts(&pos, chunks, cfg.fold);
        let (tn, vn, rn) = fold_parts(&neg, chunks, cfg.fold);
        for (part, (n, p)) in [(rn, rp), (vn, vp), (tn, tp)].into_iter().enumerate() {
            per_part[part].push((cfg.graph, link_graph(g, &split, [n, p])));
        }
    } else {
        for (part, graphs) in parts.iter().enumerate() {
            for &gi in graphs.iter() {
                let g = gs.graph(gi);
                let split = link_split(g, LINK_SUPPORT_FRACTION, derive_seed(seed, 3 + gi as u64))?;
                let query = [split.query_neg.clone(), split.query_pos.clone()];
                per_part[part].push((gi, link_graph(g, &split, query)));
            }
        }
    }
    for (name, lgs) in ["training", "validation", "test"].iter().zip(&per_part) {
        for (gi, lg) in lgs {
            if lg.support.iter().any(|s| s.len() < cfg.shots)
                || lg.query.iter().any(|q| q.is_empty())
            {
                return Err(Error::invalid(format!(
                    "graph {gi} has too few {name} links for {}-shot episodes",
                    cfg.shots
                )));
            }
        }
    }
    let mut episodes = Vec::new();
    for (part, count) in [cfg.train_episodes, cfg.val_episodes, cfg.test_episodes]
        .into_iter()
        .enumerate()
    {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, 10 + part as u64 + 100 * cfg.fold as u64));
        let lgs = &per_part[part];
        let eps = (0..count)
            .map(|_| {
                let (gi, lg) = &lgs[rng.gen_range(0..lgs.len())];
                sample_link_episode(*gi, lg, cfg, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        episodes.push(eps);
    }
    let test = episodes.pop().unwrap();
    let val = episodes.pop().unwrap();
    let train = episodes.pop().unwrap();
    Ok(MetaSplit {
        setup: cfg.setup,
        task: cfg.task,
        train,
        val,
        test,
        train_classes: vec![0, 1],
        val_classes: vec![0, 1],
        test_classes: vec![0, 1],
        train_graphs: train_g,
        val_graphs: val_g,
        test_graphs: test_g,
    })
}
