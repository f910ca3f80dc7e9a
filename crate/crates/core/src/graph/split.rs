use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

/// Held-out edge partition of one graph for link prediction. Every pair is
/// stored as `(min, max)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkSplit {
    pub support_pos: Vec<(u32, u32)>,
    pub support_neg: Vec<(u32, u32)>,
    pub query_pos: Vec<(u32, u32)>,
    pub query_neg: Vec<(u32, u32)>,
}

/// Partition the edges of `g` into a support share (rounded to the nearest
/// edge) and a query remainder, and draw one distinct non-edge per positive.
pub fn link_split(g: &Graph, support_fraction: f64, seed: u64) -> Result<LinkSplit> {
    let m = g.num_edges();
    if m < 10 {
        return Err(Error::invalid(format!(
            "link split needs at least 10 edges, graph has {m}"
        )));
    }
    if !(support_fraction > 0.0 && support_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "support fraction must lie in (0, 1), got {support_fraction}"
        )));
    }
    let n = g.num_nodes() as u64;
    let non_edges = n * (n - 1) / 2 - m as u64;
    if non_edges < m as u64 {
        return Err(Error::invalid(format!(
            "graph is too dense to draw {m} distinct non-edges ({non_edges} available)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = g.edges();
    edges.shuffle(&mut rng);
    let n_support = ((m as f64) * support_fraction).round() as usize;
    let query_pos = edges.split_off(n_support);
    let support_pos = edges;

    let mut used = HashSet::new();
    let mut draw = |count: usize, rng: &mut ChaCha8Rng| {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let a = rng.gen_range(0..n as u32);
            let b = rng.gen_range(0..n as u32);
            if a == b || g.has_edge(a, b) {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if used.insert(pair) {
                out.push(pair);
            }
        }
        out
    };
    let support_neg = draw(support_pos.len(), &mut rng);
    let query_neg = draw(query_pos.len(), &mut rng);
    Ok(LinkSplit {
        support_pos,
        support_neg,
        query_pos,
        query_neg,
    })
}
