use std::collections::HashSet;

use super::*;
use crate::encoder::{Activation, ParameterSet};
use crate::graph::{gen_synthetic_cycle, CycleConfig, Graph, GraphStore, Root};
use crate::hyperbolic::Curvature;
use crate::params::{GradientBundle, ParamGroup, Tensor};

fn small_cycle(n_graphs: usize) -> GraphStore {
    gen_synthetic_cycle(&CycleConfig {
        n_graphs,
        cycle_len: 60,
        motifs_per_graph: 24,
        seed: 3,
    })
    .unwrap()
}

fn small_split(setup: Setup, task: Task) -> SplitConfig {
    SplitConfig {
        setup,
        task,
        queries: 3,
        train_episodes: 12,
        val_episodes: 4,
        test_episodes: 6,
        ..Default::default()
    }
}

fn small_train() -> TrainConfig {
    TrainConfig {
        dim: 6,
        max_meta_steps: 6,
        eval_every: 2,
        batch_size: 2,
        ..Default::default()
    }
}

fn roots(ep: &Episode) -> (Vec<Root>, Vec<Root>) {
    (
        ep.support.iter().map(|(s, _)| s.root()).collect(),
        ep.query.iter().map(|(s, _)| s.root()).collect(),
    )
}

#[test]
fn disjoint_label_split_on_cycle_data() {
    let gs = small_cycle(1);
    for fold in 0..5 {
        let cfg = SplitConfig {
            fold,
            ..small_split(Setup::SgDl, Task::Node)
        };
        let split = make_meta_split(&gs, &cfg, 7).unwrap();
        let train: HashSet<u32> = split.train_classes.iter().copied().collect();
        assert!(split.test_classes.iter().all(|c| !train.contains(c)));
        assert!(split
            .val_classes
            .iter()
            .all(|c| !split.test_classes.contains(c)));
        for (eps, allowed) in [
            (&split.train, &split.train_classes),
            (&split.test, &split.test_classes),
        ] {
            for ep in eps.iter() {
                assert_eq!(ep.support.len(), 4);
                assert_eq!(ep.n_way(), 2);
                assert!(ep.classes.iter().all(|c| allowed.contains(c)));
                for (s, y) in ep.support.iter().chain(&ep.query) {
                    assert_eq!(s.label(), ep.classes[*y]);
                    assert_eq!(s.graph_index(), 0);
                }
                let (sr, qr) = roots(ep);
                assert!(sr.iter().all(|r| !qr.contains(r)));
                let per_class = (0..2).map(|k| ep.query.iter().filter(|(_, y)| *y == k).count());
                let counts: Vec<usize> = per_class.collect();
                assert_eq!(counts[0], counts[1]);
            }
        }
    }
}

#[test]
fn splits_are_deterministic() {
    let gs = small_cycle(3);
    for setup in [Setup::SgSl, Setup::SgDl, Setup::MgSl, Setup::MgDl] {
        let cfg = small_split(setup, Task::Node);
        let a = make_meta_split(&gs, &cfg, 11).unwrap();
        let b = make_meta_split(&gs, &cfg, 11).unwrap();
        let c = make_meta_split(&gs, &cfg, 12).unwrap();
        let fp = |s: &MetaSplit| {
            s.train
                .iter()
                .chain(&s.test)
                .map(Episode::fingerprint)
                .collect::<Vec<_>>()
        };
        assert_eq!(fp(&a), fp(&b), "{setup}");
        assert_ne!(fp(&a), fp(&c), "{setup}");
    }
}

#[test]
fn multi_graph_split_keeps_graphs_apart() {
    let gs = small_cycle(5);
    let split = make_meta_split(&gs, &small_split(Setup::MgSl, Task::Node), 1).unwrap();
    assert!(split
        .test_graphs
        .iter()
        .all(|g| !split.train_graphs.contains(g)));
    for (eps, graphs) in [
        (&split.train, &split.train_graphs),
        (&split.test, &split.test_graphs),
    ] {
        for ep in eps.iter() {
            assert!(ep
                .support
                .iter()
                .chain(&ep.query)
                .all(|(s, _)| graphs.contains(&s.graph_index())));
        }
    }
}

#[test]
fn shared_label_single_graph_keeps_roots_apart() {
    let gs = small_cycle(1);
    let split = make_meta_split(&gs, &small_split(Setup::SgSl, Task::Node), 2).unwrap();
    let train: HashSet<Root> = split
        .train
        .iter()
        .flat_map(|e| roots(e).0.into_iter().chain(roots(e).1))
        .collect();
    for ep in &split.test {
        let (s, q) = roots(ep);
        assert!(s.iter().chain(&q).all(|r| !train.contains(r)));
    }
}

#[test]
fn split_errors_name_the_shortfall() {
    // Three classes cannot host two disjoint 2-way class sets.
    let edges: Vec<(u32, u32)> = (0..29).map(|i| (i, i + 1)).collect();
    let labels = (0..30).map(|i| i % 3).collect();
    let gs = GraphStore::new(vec![Graph::new(30, &edges, None, labels).unwrap()]).unwrap();
    let err = make_meta_split(&gs, &small_split(Setup::SgDl, Task::Node), 0).unwrap_err();
    assert!(err.to_string().contains("at least 4 classes"), "{err}");
    let err = make_meta_split(&gs, &small_split(Setup::MgSl, Task::Node), 0).unwrap_err();
    assert!(err.to_string().contains("at least 2 graphs"), "{err}");
    assert!(make_meta_split(&gs, &small_split(Setup::SgDl, Task::Link), 0).is_err());
}

#[test]
fn link_episodes_do_not_leak_query_edges() {
    let gs = small_cycle(3);
    for setup in [Setup::SgSl, Setup::MgSl] {
        let split = make_meta_split(&gs, &small_split(setup, Task::Link), 4).unwrap();
        for ep in split.train.iter().chain(&split.test) {
            let gi = ep.support[0].0.graph_index();
            let g = gs.graph(gi);
            let query_pos: Vec<(u32, u32)> = ep
                .query
                .iter()
                .filter(|(_, y)| *y == 1)
                .map(|(s, _)| match s.root() {
                    Root::Link(u, v) => (u.min(v), u.max(v)),
                    Root::Node(_) => unreachable!(),
                })
                .collect();
            for (s, y) in ep.support.iter().chain(&ep.query) {
                let Root::Link(u, v) = s.root() else { panic!() };
                assert_eq!(g.has_edge(u, v), *y == 1);
                assert_eq!(s.label(), *y as u32);
                let edges = s.original_edges();
                assert!(!edges.contains(&(u.min(v), u.max(v))));
                for q in &query_pos {
                    assert!(!edges.contains(q));
                }
            }
        }
    }
}

fn one_class_episode(ep: &Episode) -> Episode {
    let keep = |set: &[(crate::graph::Subgraph, usize)]| {
        set.iter().filter(|(_, y)| *y == 0).cloned().collect()
    };
    Episode {
        support: keep(&ep.support),
        query: keep(&ep.query),
        classes: vec![ep.classes[0]],
    }
}

fn fixture() -> (MetaSplit, ParameterSet) {
    let gs = small_cycle(1);
    let split = make_meta_split(&gs, &small_split(Setup::SgDl, Task::Node), 5).unwrap();
    let p = small_train().init_params(gs.feature_dim(), 9).unwrap();
    (split, p)
}

#[test]
fn inner_adapt_examples() {
    let (split, p) = fixture();
    let sup = &split.train[0].support;
    let before = p.fingerprint();
    let same = inner_adapt(&p, sup, 0.0, 3).unwrap();
    assert_eq!(same, p);
    let one = inner_adapt(&p, sup, 0.05, 1).unwrap();
    let two = inner_adapt(&p, sup, 0.05, 2).unwrap();
    assert_eq!(inner_adapt(&one, sup, 0.05, 1).unwrap(), two);
    assert_ne!(one, p);
    assert_eq!(p.fingerprint(), before);

    let degenerate = one_class_episode(&split.train[0]);
    assert_eq!(inner_adapt(&p, &degenerate.support, 0.5, 3).unwrap(), p);
    assert!(inner_adapt(&p, &[], 0.1, 1).is_err());
}

#[test]
fn updates_keep_biases_inside_the_ball() {
    let (split, p) = fixture();
    let p = p
        .with_tensors({
            let mut t = p.tensors().to_vec();
            t[1].data.iter_mut().for_each(|x| *x = 0.3);
            t
        })
        .unwrap();
    let adapted = inner_adapt(&p, &split.train[1].support, 50.0, 5).unwrap();
    let mut opt = OptimizerState::new(0.5, 5.0, 2, MetaOptimizer::Sgd).unwrap();
    let batch: Vec<&Episode> = split.train.iter().take(2).collect();
    let (stepped, _) = meta_step(&adapted, &batch, &mut opt, Head::Prototype).unwrap();
    for q in [&adapted, &stepped] {
        for t in q
            .tensors()
            .iter()
            .filter(|t| t.group == ParamGroup::Manifold)
        {
            let n: f64 = t.data.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(
                n < 1.0 / q.curvature().value().sqrt(),
                "{} has norm {n}",
                t.name
            );
        }
    }
}

#[test]
fn meta_step_examples() {
    let (split, p) = fixture();
    let e = &split.train[0];
    for kind in [MetaOptimizer::Adam, MetaOptimizer::Sgd] {
        let mut opt = OptimizerState::new(0.01, 0.0, 2, kind).unwrap();
        let (q, stats) = meta_step(&p, &[e], &mut opt, Head::Prototype).unwrap();
        assert_eq!(q, p);
        assert!((0.0..=1.0).contains(&stats.accuracy) && stats.loss.is_finite());

        let flat = one_class_episode(e);
        let mut opt = OptimizerState::new(0.01, 0.1, 2, kind).unwrap();
        assert_eq!(
            meta_step(&p, &[&flat], &mut opt, Head::Prototype)
                .unwrap()
                .0,
            p
        );
    }
    assert!(meta_step(
        &p,
        &[],
        &mut OptimizerState::new(0.01, 0.1, 1, MetaOptimizer::Sgd).unwrap(),
        Head::Prototype
    )
    .is_err());
}

fn max_diff(a: &ParameterSet, b: &ParameterSet) -> f64 {
    a.tensors()
        .iter()
        .zip(b.tensors())
        .flat_map(|(x, y)| x.data.iter().zip(&y.data).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn plain_sgd_meta_update_is_linear_in_episodes() {
    let (split, p) = fixture();
    let (e1, e2) = (&split.train[0], &split.train[1]);
    let sgd = |beta| OptimizerState::new(0.02, beta, 2, MetaOptimizer::Sgd).unwrap();
    let (twice, _) = meta_step(&p, &[e1, e1], &mut sgd(0.1), Head::Prototype).unwrap();
    let (double, _) = meta_step(&p, &[e1], &mut sgd(0.2), Head::Prototype).unwrap();
    assert!(max_diff(&twice, &double) <= 1e-10);
    assert!(max_diff(&twice, &p) > 1e-6);

    // Euclidean tensors move by the sum of the per-episode moves.
    let (both, _) = meta_step(&p, &[e1, e2], &mut sgd(0.1), Head::Prototype).unwrap();
    let (a, _) = meta_step(&p, &[e1], &mut sgd(0.1), Head::Prototype).unwrap();
    let (b, _) = meta_step(&p, &[e2], &mut sgd(0.1), Head::Prototype).unwrap();
    for l in 0..p.num_layers() {
        let (w0, wa, wb, wab) = (p.weight(l), a.weight(l), b.weight(l), both.weight(l));
        for i in 0..w0.data().len() {
            let sum = wa.data()[i] - w0.data()[i] + wb.data()[i] - w0.data()[i];
            assert!((wab.data()[i] - w0.data()[i] - sum).abs() <= 1e-10);
        }
    }
}

#[test]
fn meta_step_is_independent_of_thread_count() {
    let (split, p) = fixture();
    let batch: Vec<&Episode> = split.train.iter().take(4).collect();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let mut opt = OptimizerState::new(0.05, 0.01, 3, MetaOptimizer::Adam).unwrap();
                meta_step(&p, &batch, &mut opt, Head::Prototype)
                    .unwrap()
                    .0
                    .fingerprint()
            })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn adam_examples() {
    let p = ParameterSet::init_with(&[3, 2], Curvature::default(), Activation::Relu, 1).unwrap();
    let mut opt = OptimizerState::new(0.01, 0.01, 1, MetaOptimizer::Adam).unwrap();
    assert_eq!((opt.beta1, opt.beta2, opt.eps), (0.9, 0.999, 1e-8));
    let zero = GradientBundle::zeros_like(p.tensors());
    let mut q = p.clone();
    for _ in 0..20 {
        q = riemannian_adam_step(&zero, &mut opt, &q).unwrap();
    }
    assert_eq!(q, p);

    let mut opt = OptimizerState::new(0.01, 0.01, 1, MetaOptimizer::Adam).unwrap();
    let g: Vec<Tensor> = p
        .tensors()
        .iter()
        .map(|t| Tensor {
            data: (0..t.data.len())
                .map(|i| if i % 2 == 0 { 3.0 } else { -0.2 })
                .collect(),
            ..t.clone()
        })
        .collect();
    let g = GradientBundle::from_tensors(g);
    let q = riemannian_adam_step(&g, &mut opt, &p).unwrap();
    let (w0, w1) = (p.weight(0), q.weight(0));
    for (a, b) in w0.data().iter().zip(w1.data()) {
        assert!(((a - b).abs() - 0.01).abs() < 1e-8);
    }
    assert_eq!(opt.t, 1);
}

#[test]
fn meta_train_examples() {
    let (split, p) = fixture();
    let cfg = TrainConfig {
        max_meta_steps: 0,
        ..small_train()
    };
    let out = meta_train(&split, &cfg, p.clone(), Head::Prototype, 1).unwrap();
    assert_eq!(out.params, p);
    assert!(out.log.is_empty());

    let cfg = TrainConfig {
        patience: 100,
        ..small_train()
    };
    let out = meta_train(&split, &cfg, p.clone(), Head::Prototype, 1).unwrap();
    assert_eq!(out.log.len(), 6);
    assert!(out
        .log
        .iter()
        .enumerate()
        .all(|(i, r)| r.step == i + 1 && r.split == LogSplit::Train && r.loss.is_some()));
    assert_eq!(out.validation.len(), 4);
    let again = meta_train(&split, &cfg, p, Head::Prototype, 1).unwrap();
    assert_eq!(again, out);
}

#[test]
fn meta_test_reports_bounded_deterministic_accuracy() {
    let (split, p) = fixture();
    for head in [Head::Prototype, Head::Linear] {
        let a = meta_test(&p, &split.test, 0.05, 2, head).unwrap();
        assert_eq!(a.accuracies.len(), split.test.len());
        assert!(a.accuracies.iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(a, meta_test(&p, &split.test, 0.05, 2, head).unwrap());
    }
    assert!(meta_test(&p, &[], 0.1, 1, Head::Prototype).is_err());
}

#[test]
fn ablation_table_has_three_rows() {
    let gs = small_cycle(1);
    let folds: Vec<MetaSplit> = (0..2)
        .map(|fold| {
            make_meta_split(
                &gs,
                &SplitConfig {
                    fold,
                    ..small_split(Setup::SgDl, Task::Node)
                },
                0,
            )
            .unwrap()
        })
        .collect();
    let cfg = TrainConfig {
        max_meta_steps: 2,
        ..small_train()
    };
    let table = run_ablation(&folds, &cfg, 0).unwrap();
    let names: Vec<&str> = table.rows.iter().map(|r| r.variant.name()).collect();
    assert_eq!(names, ["h-gram", "h-protonet", "h-maml"]);
    assert!(table
        .rows
        .iter()
        .all(|r| r.fold_accuracies.len() == 2 && r.summary.ci95.is_finite()));
    assert_eq!(table.episode_hashes.len(), 2);
}

#[test]
fn summary_uses_student_t() {
    let s = summarize(&[1.0, 2.0, 3.0]);
    assert_eq!(s.mean, 2.0);
    assert!((s.ci95 - 4.302652729911275 / 3f64.sqrt()).abs() < 1e-9);
    assert_eq!(summarize(&[0.5]).ci95, 0.0);
}
