use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::verify::{is_decreasing, random_er, random_tree};
use super::*;
use crate::encoder::{encode_subgraph, Activation};
use crate::graph::{khop_subgraph, DEFAULT_FEATURE_DIM};
use crate::hyperbolic::Curvature;

fn feats(rows: &[[f64; 2]]) -> Option<Matrix> {
    Some(Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
}

fn identity_encoder(dim: usize, layers: usize) -> ParameterSet {
    ParameterSet::from_layers(
        vec![Matrix::identity(dim); layers],
        vec![vec![0.0; dim]; layers],
        Curvature::default(),
        Activation::Identity,
    )
    .unwrap()
}

fn linear_encoder(layers: usize, seed: u64) -> ParameterSet {
    let mut dims = vec![DEFAULT_FEATURE_DIM];
    dims.extend(std::iter::repeat_n(6, layers));
    ParameterSet::init_with(&dims, Curvature::default(), Activation::Identity, seed).unwrap()
}

fn path(n: usize) -> Graph {
    let edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
    Graph::new(n, &edges, None, vec![0; n]).unwrap()
}

#[test]
fn single_node_identity_layer() {
    let g = Graph::new(1, &[], feats(&[[0.3, -0.2]]), vec![0]).unwrap();
    let p = identity_encoder(2, 1);
    let i = influence_score(&g, &p, 0, 0).unwrap();
    assert!((i - 1f64.tanh()).abs() < 1e-10);
    let gi = graph_influence(&g, &p, 0).unwrap();
    assert!((gi - i).abs() < 1e-12);
}

#[test]
#[allow(clippy::needless_range_loop)]
fn three_node_path_matches_hand_unroll() {
    let g = Graph::new(
        3,
        &[(0, 1), (1, 2)],
        feats(&[[0.3, 0.1], [-0.2, 0.4], [0.1, 0.1]]),
        vec![0; 3],
    )
    .unwrap();
    let p = identity_encoder(2, 2);
    // Mean aggregation over N(u) ∪ {u}, applied twice.
    let a = [
        [0.5, 0.5, 0.0],
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [0.0, 0.5, 0.5],
    ];
    let mut a2 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a2[i][j] = (0..3).map(|k| a[i][k] * a[k][j]).sum();
        }
    }
    for u in 0..3 {
        let s = Subgraph::whole(&g, 0, u as u32).unwrap();
        let jac = root_jacobians(&p, &s, u).unwrap();
        for v in 0..3 {
            for r in 0..2 {
                for c in 0..2 {
                    let want = if r == c { a2[u][v] } else { 0.0 };
                    assert!(
                        (jac[v].get(r, c) - want).abs() < 1e-10,
                        "J[{u}][{v}]({r},{c})"
                    );
                }
            }
        }
    }
    let gi = graph_influence(&g, &p, 0).unwrap();
    let brute: f64 = (0..3)
        .map(|v| influence_score(&g, &p, 0, v).unwrap().atanh())
        .sum::<f64>()
        .tanh();
    assert!((gi - brute).abs() < 1e-12);
    assert!((influence_score(&g, &p, 0, 2).unwrap() - (1.0f64 / 6.0).tanh()).abs() < 1e-10);
}

#[test]
fn influence_is_zero_outside_receptive_field() {
    let g = path(6);
    for layers in 1..=3 {
        let p = linear_encoder(layers, 3);
        for v in 0..6u32 {
            let i = influence_score(&g, &p, 0, v).unwrap();
            if v as usize > layers {
                assert_eq!(i, 0.0, "L = {layers}, v = {v}");
            } else {
                assert!(i > 0.0, "L = {layers}, v = {v}");
            }
        }
    }
}

#[test]
fn unreachable_component_leaves_graph_influence_unchanged() {
    let p = linear_encoder(2, 5);
    let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3)], None, vec![0; 4]).unwrap();
    let h = Graph::new(
        7,
        &[(0, 1), (1, 2), (2, 3), (4, 5), (5, 6)],
        None,
        vec![0; 7],
    )
    .unwrap();
    for u in 0..4 {
        let a = graph_influence(&g, &p, u).unwrap();
        let b = graph_influence(&h, &p, u).unwrap();
        assert_eq!(a, b);
        assert_eq!(influence_score(&h, &p, u, 5).unwrap(), 0.0);
    }
}

#[test]
fn missing_nodes_are_rejected() {
    let p = linear_encoder(1, 0);
    let g = path(3);
    assert!(influence_score(&g, &p, 0, 3).is_err());
    assert!(graph_influence(&g, &p, 7).is_err());
    assert!(theorem_bound(&g, &p, 1, 1, Theorem::NodeInfluence).is_err());
}

#[test]
fn covering_subgraph_loses_nothing() {
    let p = linear_encoder(2, 9);
    // Star with the root at the center: the 1-hop ball is everything.
    let star = Graph::new(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], None, vec![0; 5]).unwrap();
    let s = khop_subgraph(&star, 0, 0, 1).unwrap();
    assert_eq!(information_loss(&star, &s, &p).unwrap(), 0.0);
    // k at least the eccentricity, plus a second component that is not covered.
    let g = Graph::new(
        7,
        &[(0, 1), (1, 2), (2, 3), (4, 5), (5, 6)],
        None,
        vec![0; 7],
    )
    .unwrap();
    for u in 0..4 {
        let s = khop_subgraph(&g, 0, u, 3).unwrap();
        assert_eq!(information_loss(&g, &s, &p).unwrap(), 0.0);
    }
}

#[test]
fn loss_is_tiny_and_non_increasing_in_k_on_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    // Non-negative weights.
    let base = linear_encoder(2, 4);
    let weights: Vec<Matrix> = (0..2)
        .map(|l| {
            let w = base.weight(l);
            let data: Vec<f64> = w.data().iter().map(|x| x.abs()).collect();
            Matrix::new(w.rows(), w.cols(), data).unwrap()
        })
        .collect();
    let p = ParameterSet::from_layers(
        weights,
        vec![vec![0.0; 6]; 2],
        Curvature::default(),
        Activation::Identity,
    )
    .unwrap();
    for _ in 0..10 {
        let n = rng.gen_range(4..=10);
        let g = random_tree(n, &mut rng);
        for u in 0..n as u32 {
            let ecc = g.bfs_distances(u).iter().flatten().copied().max().unwrap();
            let losses: Vec<f64> = (1..=ecc.max(1))
                .map(|k| information_loss(&g, &khop_subgraph(&g, 0, u, k).unwrap(), &p).unwrap())
                .collect();
            // Mean aggregation keeps every row of the propagation matrix
            // stochastic on the ball too, so the loss of a linear encoder is
            // zero up to power-iteration precision.
            for w in losses.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{losses:?}");
            }
            assert!(losses.iter().all(|l| l.abs() < 1e-9), "{losses:?}");
            assert_eq!(*losses.last().unwrap(), 0.0);
        }
    }
}

#[test]
fn encoding_ignores_features_outside_the_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = linear_encoder(2, 1).with_activation(Activation::Relu);
    for _ in 0..5 {
        let g = random_er(10, 0.3, &mut rng);
        let u = rng.gen_range(0..10u32);
        let s = khop_subgraph(&g, 0, u, 2).unwrap();
        let before = encode_subgraph(&p, &s).unwrap();
        let mut x = Matrix::zeros(10, DEFAULT_FEATURE_DIM);
        for v in 0..10u32 {
            let row: Vec<f64> = if s.local_index(v).is_some() {
                g.feature_row(v)
            } else {
                (0..DEFAULT_FEATURE_DIM)
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect()
            };
            for (j, val) in row.into_iter().enumerate() {
                x.set(v as usize, j, val);
            }
        }
        let g2 = g.with_features(Some(x)).unwrap();
        let after = encode_subgraph(&p, &khop_subgraph(&g2, 0, u, 2).unwrap()).unwrap();
        assert_eq!(before, after);
    }
}

#[test]
fn path_enumeration_examples() {
    let g = Graph::new(2, &[(0, 1)], None, vec![0; 2]).unwrap();
    let paths = simple_paths(&g, 0, 1).unwrap();
    assert_eq!(paths, vec![vec![0, 1]]);
    assert_eq!(path_degree_mean(&g, &paths[0]), 1.0);

    let cycle = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], None, vec![0; 4]).unwrap();
    let paths = simple_paths(&cycle, 0, 2).unwrap();
    assert_eq!(paths.len(), 2);
    assert!(paths.iter().all(|p| p.len() == 3));

    let p4 = path(4);
    let p = linear_encoder(1, 0);
    let b = theorem_bound(&p4, &p, 1, 2, Theorem::NodeInfluence).unwrap();
    assert_eq!(b.n_paths, 1);
    assert_eq!(b.shortest, 1);
    assert!((b.d_min - 2.0).abs() < 1e-15);
    assert!((b.k - weight_norm_product(&p)).abs() < 1e-15);
    assert!((b.value - (b.k / 2.0).tanh()).abs() < 1e-15);

    let b = theorem_bound(
        &p4,
        &p,
        0,
        3,
        Theorem::InformationLoss { subgraph_nodes: 2 },
    )
    .unwrap();
    assert_eq!(b.scale, 2.0);
    assert_eq!(b.exponent, 4);
    let d = (2f64 * 2.0).powf(0.25);
    assert!((b.d_min - d).abs() < 1e-12);
    assert!((b.value - (b.k / d.powi(4)).tanh()).abs() < 1e-12);

    let split = Graph::new(3, &[(0, 1)], None, vec![0; 3]).unwrap();
    let b = theorem_bound(&split, &p, 0, 2, Theorem::NodeInfluence).unwrap();
    assert!(b.vacuous);
    assert_eq!(b.value, 0.0);
}

#[test]
fn power_iteration_matches_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = linear_encoder(2, 6).with_activation(Activation::Relu);
    for _ in 0..5 {
        let n = rng.gen_range(4..=12);
        let g = random_er(n, 0.3, &mut rng);
        let s = Subgraph::whole(&g, 0, 0).unwrap();
        for j in root_jacobians(&p, &s, 0).unwrap() {
            let dense = DMatrix::from_row_slice(j.rows(), j.cols(), j.data());
            let sv = dense.singular_values().max();
            assert!((j.spectral_norm(SPECTRAL_TOL) - sv).abs() < 1e-8);
        }
    }
}

#[test]
fn decreasing_curve_check() {
    let pt = |distance, mean_influence| CurvePoint {
        distance,
        mean_influence,
        pairs: 1,
    };
    assert!(is_decreasing(&[
        pt(1, 0.5),
        pt(2, 0.1),
        pt(3, 0.0),
        pt(4, 0.0)
    ]));
    assert!(!is_decreasing(&[pt(1, 0.5), pt(2, 0.5)]));
    assert!(!is_decreasing(&[pt(1, 0.0), pt(2, 0.1)]));
}

#[test]
fn small_sweep_reports_every_pair() {
    let cfg = VerifyConfig {
        n_graphs: 6,
        max_nodes: 8,
        seed: 3,
        ..VerifyConfig::default()
    };
    let r = verify_bounds(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut expected = 0;
    let mut roots = 0;
    for i in 0..cfg.n_graphs {
        let n = rng.gen_range(cfg.min_nodes..=cfg.max_nodes);
        if i % 2 == 0 {
            random_tree(n, &mut rng);
        } else {
            random_er(n, cfg.edge_prob, &mut rng);
        }
        expected += n * (n - 1);
        roots += n;
    }
    assert_eq!(r.rows.len(), expected);
    assert_eq!(r.loss_rows.len(), roots);
    for row in &r.rows {
        assert!(row.influence >= 0.0);
        assert_eq!(row.satisfied, row.influence <= row.bound);
        if row.distance > cfg.hidden_dims.len() || row.vacuous {
            assert_eq!(row.influence, 0.0);
        }
    }
    assert_eq!(
        r.influence_violations,
        r.rows.iter().filter(|x| !x.satisfied).count()
    );
    let again = verify_bounds(&cfg).unwrap();
    assert_eq!(r.pairs_csv(), again.pairs_csv());
    assert_eq!(r.loss_csv(), again.loss_csv());
    assert_eq!(r.curve_csv(), again.curve_csv());
    assert_eq!(r.pairs_csv().lines().count(), expected + 1);
}

#[test]
fn invalid_sweeps_are_rejected() {
    for cfg in [
        VerifyConfig {
            n_graphs: 0,
            ..VerifyConfig::default()
        },
        VerifyConfig {
            max_nodes: 13,
            ..VerifyConfig::default()
        },
        VerifyConfig {
            edge_prob: 1.5,
            ..VerifyConfig::default()
        },
        VerifyConfig {
            curvature: 0.0,
            ..VerifyConfig::default()
        },
    ] {
        assert!(verify_bounds(&cfg).is_err());
    }
}
