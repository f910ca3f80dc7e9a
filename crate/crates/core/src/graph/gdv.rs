//! Graphlet degree vectors over the 15 automorphism orbits of connected
//! graphlets on 2 to 4 nodes.
//!
//! Orbit numbering:
//!
//! | graphlet      | orbits                                   |
//! |---------------|------------------------------------------|
//! | edge          | 0                                        |
//! | 3-path        | 1 end, 2 middle                          |
//! | triangle      | 3                                        |
//! | 4-path        | 4 end, 5 interior                        |
//! | 3-star        | 6 leaf, 7 center                         |
//! | 4-cycle       | 8                                        |
//! | paw           | 9 pendant, 10 degree-2, 11 degree-3      |
//! | diamond       | 12 degree-2, 13 degree-3                 |
//! | 4-clique      | 14                                       |

use rayon::prelude::*;

use super::{bfs_ball, Graph};

pub const ORBITS: usize = 15;

pub type Gdv = [u64; ORBITS];

/// Orbit of every node of a connected graphlet on `k ∈ 2..=4` nodes given by
/// local edges, or `None` if the graphlet is disconnected or out of range.
pub fn classify_graphlet(k: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    if !(2..=4).contains(&k) {
        return None;
    }
    let mut deg = vec![0usize; k];
    let mut adj = [[false; 4]; 4];
    for &(a, b) in edges {
        if a >= k || b >= k || a == b || adj[a][b] {
            return None;
        }
        adj[a][b] = true;
        adj[b][a] = true;
        deg[a] += 1;
        deg[b] += 1;
    }
    if !connected(k, &adj) {
        return None;
    }
    let e = edges.len();
    let orbit = |d: usize| -> usize {
        match (k, e, d) {
            (2, 1, _) => 0,
            (3, 2, 1) => 1,
            (3, 2, _) => 2,
            (3, 3, _) => 3,
            // 3 edges: path (degrees 1,1,2,2) or star (3,1,1,1)
            (4, 3, _) if deg.contains(&3) => {
                if d == 3 {
                    7
                } else {
                    6
                }
            }
            (4, 3, 1) => 4,
            (4, 3, _) => 5,
            // 4 edges: cycle (all 2) or paw (3,2,2,1)
            (4, 4, _) if deg.iter().all(|&x| x == 2) => 8,
            (4, 4, 1) => 9,
            (4, 4, 2) => 10,
            (4, 4, _) => 11,
            (4, 5, 2) => 12,
            (4, 5, _) => 13,
            _ => 14,
        }
    };
    Some(deg.iter().map(|&d| orbit(d)).collect())
}

fn connected(k: usize, adj: &[[bool; 4]; 4]) -> bool {
    let mut seen = [false; 4];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..k {
            if adj[u][v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen[..k].iter().all(|&s| s)
}

/// Orbit counts for every node, by ESU enumeration of all connected induced
/// subgraphs with 2 to 4 nodes.
pub fn graphlet_degree_vectors(g: &Graph) -> Vec<Gdv> {
    let n = g.num_nodes();
    (0..n as u32)
        .into_par_iter()
        .fold(
            || vec![[0u64; ORBITS]; n],
            |mut acc, v| {
                let ext: Vec<u32> = g.neighbors(v).iter().copied().filter(|&u| u > v).collect();
                extend(g, &mut vec![v], ext, v, &mut acc);
                acc
            },
        )
        .reduce(
            || vec![[0u64; ORBITS]; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    for (p, q) in x.iter_mut().zip(y) {
                        *p += q;
                    }
                }
                a
            },
        )
}

/// Orbit counts of a single node. Only the 3-hop ball matters, since every
/// connected graphlet on at most 4 nodes lies within it.
pub fn graphlet_degree_vector(g: &Graph, node: u32) -> Gdv {
    let ball = bfs_ball(g, &[node], 3, None);
    let mut ids = ball.clone();
    ids.sort_unstable();
    let local = |u: u32| ids.binary_search(&u).ok().map(|i| i as u32);
    let mut edges = Vec::new();
    for &u in &ids {
        for &v in g.neighbors(u) {
            if u < v {
                if let (Some(a), Some(b)) = (local(u), local(v)) {
                    edges.push((a, b));
                }
            }
        }
    }
    let sub = Graph::new(ids.len(), &edges, None, vec![0; ids.len()])
        .expect("induced ball is a valid graph");
    graphlet_degree_vectors(&sub)[local(node).unwrap() as usize]
}

fn extend(g: &Graph, sub: &mut Vec<u32>, mut ext: Vec<u32>, v: u32, acc: &mut [Gdv]) {
    if sub.len() >= 2 {
        record(g, sub, acc);
    }
    if sub.len() == 4 {
        return;
    }
    while let Some(w) = ext.pop() {
        let mut next = ext.clone();
        for &u in g.neighbors(w) {
            if u > v
                && !sub.contains(&u)
                && !next.contains(&u)
                && u != w
                && !sub.iter().any(|&s| g.has_edge(s, u))
            {
                next.push(u);
            }
        }
        sub.push(w);
        extend(g, sub, next, v, acc);
        sub.pop();
    }
}

fn record(g: &Graph, sub: &[u32], acc: &mut [Gdv]) {
    let k = sub.len();
    let mut edges = Vec::with_capacity(6);
    for i in 0..k {
        for j in i + 1..k {
            if g.has_edge(sub[i], sub[j]) {
                edges.push((i, j));
            }
        }
    }
    let orbits = classify_graphlet(k, &edges).expect("ESU only yields connected sets");
    for (&u, o) in sub.iter().zip(orbits) {
        acc[u as usize][o] += 1;
    }
}
