use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const KMEANS_RESTARTS: usize = 10;
const KMEANS_ITERS: usize = 300;

/// Spectral clustering of `vectors` under cosine similarity.
///
/// The affinity `S = V̂V̂ᵀ` (rows normalized to unit length) is never formed:
/// with `B = D^{-1/2}V̂` the normalized affinity is `BBᵀ`, whose leading
/// eigenvectors come from the small `BᵀB`. Rows of the embedding are
/// normalized to unit length and clustered by seeded k-means++.
///
/// Inputs are processed in a canonical (sorted) order and labels are
/// numbered by first appearance in that order, so the labelling depends
/// only on the multiset of vectors and the seed.
pub fn spectral_cluster_labels(
    vectors: &[Vec<f64>],
    n_clusters: usize,
    seed: u64,
) -> Result<Vec<u32>> {
    let n = vectors.len();
    if n_clusters == 0 {
        return Err(Error::invalid("need at least one cluster"));
    }
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let f = first.len();
    if vectors
        .iter()
        .any(|v| v.len() != f || v.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::invalid(
            "vectors must be finite and share one length",
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_vec(&vectors[a], &vectors[b]));
    let distinct = 1 + order
        .windows(2)
        .filter(|w| cmp_vec(&vectors[w[0]], &vectors[w[1]]).is_ne())
        .count();
    if n_clusters == 1 {
        return Ok(vec![0; n]);
    }
    if distinct == 1 {
        log::warn!("all {n} vectors are identical; returning a single cluster");
        return Ok(vec![0; n]);
    }
    if distinct < n_clusters {
        return Err(Error::invalid(format!(
            "{n_clusters} clusters requested but only {distinct} distinct vectors"
        )));
    }

    // Unit rows in canonical order.
    let mut vhat = DMatrix::<f64>::zeros(n, f);
    for (r, &i) in order.iter().enumerate() {
        let norm = vectors[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for j in 0..f {
                vhat[(r, j)] = vectors[i][j] / norm;
            }
        }
    }
    let colsum = vhat.row_sum();
    let degrees = &vhat * colsum.transpose();
    let mut b = vhat.clone();
    for r in 0..n {
        let d = degrees[r];
        let s = if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 };
        b.row_mut(r).scale_mut(s);
    }
    let gram = b.transpose() * &b;
    let eig = SymmetricEigen::new(gram);
    let mut idx: Vec<usize> = (0..f).collect();
    idx.sort_by(|&a, &c| {
        eig.eigenvalues[c]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&c))
    });
    let top = eig.eigenvalues[idx[0]].max(0.0);
    let mut embed = DMatrix::<f64>::zeros(n, n_clusters);
    for (col, &e) in idx.iter().take(n_clusters).enumerate() {
        let lambda = eig.eigenvalues[e];
        if lambda <= 1e-12 * top.max(1e-300) {
            continue;
        }
        let u = &b * eig.eigenvectors.column(e) / lambda.sqrt();
        // Fix the sign so the embedding does not depend on the eigensolver.
        let pivot = u
            .iter()
            .copied()
            .fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            embed[(r, col)] = sign * u[r];
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let row: Vec<f64> = embed.row(r).iter().copied().collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let assign = kmeans(&rows, n_clusters, seed);

    let mut relabel = vec![u32::MAX; n_clusters];
    let mut next = 0;
    let mut labels = vec![0u32; n];
    for (r, &i) in order.iter().enumerate() {
        let c = assign[r];
        if relabel[c] == u32::MAX {
            relabel[c] = next;
            next += 1;
        }
        labels[i] = relabel[c];
    }
    Ok(labels)
}

fn cmp_vec(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Best of several seeded k-means++ runs by inertia. Empty clusters are
/// re-seeded with the point farthest from its centroid.
fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, assign) = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, assign));
        }
    }
    best.unwrap().1
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut centers = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if t < d {
                    chosen = i;
                    break;
                }
                t -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    let dim = points[0].len();
    let mut assign = vec![0usize; n];
    for iter in 0..KMEANS_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < bd {
                    bd = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[assign[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[assign[b]]))
                            .then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                assign[far] = c;
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&assign)
        .map(|(p, &a)| sq_dist(p, &centers[a]))
        .sum();
    (inertia, assign)
}
