use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::hyperbolic::ops;
use crate::params::ParamGroup;

fn tensor(name: &str, data: Vec<f64>) -> Tensor {
    Tensor::new(name, vec![data.len()], ParamGroup::EuclideanTangent, data).unwrap()
}

fn random_ball_point(rng: &mut ChaCha8Rng, dim: usize, c: f64, max_frac: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = ops::norm(&v);
    let r = rng.gen_range(0.05..max_frac) / c.sqrt();
    v.iter().map(|x| x * r / n).collect()
}

/// `f(params)` reduced to a scalar by a fixed random projection.
struct Projected<F> {
    f: F,
    weights: Vec<f64>,
}

trait VecFn {
    fn call<T: Real>(&self, p: &[Vec<T>]) -> Vec<T>;
}

impl<F: VecFn> Objective for Projected<F> {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        let out = self.f.call(params);
        let w: Vec<T> = self.weights.iter().map(|&x| T::cst(x)).collect();
        Ok(vec![T::dot(&out, &w)])
    }
}

#[derive(Clone, Copy, Debug)]
enum Prim {
    MobiusAdd,
    ExpMap,
    LogMap,
    Exp0,
    Log0,
    MobiusScalar,
    MobiusMatvec,
    Distance,
    Conformal,
    Lorentz,
    Midpoint,
    ProjectOutside,
}

struct PrimFn {
    prim: Prim,
    c: f64,
    dim: usize,
}

impl VecFn for PrimFn {
    fn call<T: Real>(&self, p: &[Vec<T>]) -> Vec<T> {
        let c = self.c;
        match self.prim {
            Prim::MobiusAdd => ops::mobius_add(&p[0], &p[1], c),
            Prim::ExpMap => ops::exp_map(&p[0], &p[1], c),
            Prim::LogMap => ops::log_map(&p[0], &p[1], c),
            Prim::Exp0 => ops::exp0(&p[1], c),
            Prim::Log0 => ops::log0(&p[0], c),
            Prim::MobiusScalar => ops::mobius_scalar(p[1][0], &p[0], c),
            Prim::MobiusMatvec => ops::mobius_matvec(&p[1], self.dim, self.dim, &p[0], c),
            Prim::Distance => vec![ops::distance(&p[0], &p[1], c)],
            Prim::Conformal => vec![ops::conformal_factor(&p[0], c)],
            Prim::Lorentz => vec![ops::lorentz_factor(&p[0], c)],
            Prim::Midpoint => ops::einstein_midpoint(&[&p[0], &p[1]], Some(&[0.7, 1.3]), c),
            Prim::ProjectOutside => ops::project(p[1].clone(), c),
        }
    }
}

fn primitive_case(prim: Prim, rng: &mut ChaCha8Rng) -> (Projected<PrimFn>, Vec<Tensor>) {
    let c = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
    let dim = 3;
    let x = random_ball_point(rng, dim, c, 0.85);
    let second = match prim {
        Prim::MobiusAdd
        | Prim::LogMap
        | Prim::Distance
        | Prim::Midpoint
        | Prim::Log0
        | Prim::Conformal
        | Prim::Lorentz => random_ball_point(rng, dim, c, 0.85),
        Prim::ExpMap | Prim::Exp0 => (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        Prim::MobiusScalar => vec![rng.gen_range(-2.0..2.0)],
        Prim::MobiusMatvec => (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        Prim::ProjectOutside => {
            let v = random_ball_point(rng, dim, c, 0.9);
            let s = rng.gen_range(1.2..3.0) / (ops::norm(&v) * c.sqrt());
            v.iter().map(|x| x * s).collect()
        }
    };
    let out_dim = match prim {
        Prim::Distance | Prim::Conformal | Prim::Lorentz => 1,
        _ => dim,
    };
    let weights = (0..out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let program = Projected {
        f: PrimFn { prim, c, dim },
        weights,
    };
    (program, vec![tensor("x", x), tensor("y", second)])
}

#[test]
fn every_primitive_matches_finite_differences() {
    let prims = [
        Prim::MobiusAdd,
        Prim::ExpMap,
        Prim::LogMap,
        Prim::Exp0,
        Prim::Log0,
        Prim::MobiusScalar,
        Prim::MobiusMatvec,
        Prim::Distance,
        Prim::Conformal,
        Prim::Lorentz,
        Prim::Midpoint,
        Prim::ProjectOutside,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for prim in prims {
        for trial in 0..100 {
            let (program, params) = primitive_case(prim, &mut rng);
            let report = finite_difference_check(&program, &params, 1e-5, trial).unwrap();
            assert!(
                report.passes(1e-4, 1e-6),
                "{prim:?} trial {trial}: {report:?}"
            );
        }
    }
}

struct SquaredDistanceTo(Vec<f64>, f64);

impl Objective for SquaredDistanceTo {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        let target: Vec<T> = self.0.iter().map(|&v| T::cst(v)).collect();
        let d = ops::distance(&params[0], &target, self.1);
        Ok(vec![d * d])
    }
}

#[test]
fn squared_distance_has_zero_gradient_at_its_minimum() {
    let target = vec![0.3, -0.2, 0.1];
    let program = SquaredDistanceTo(target.clone(), 1.0);
    let params = [tensor("theta", target)];
    let (loss, grads) = evaluate_with_gradient(&program, &params).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.is_zero());
    let report = finite_difference_check(&program, &params, 1e-5, 0).unwrap();
    assert!(report.max_abs_error() <= 1e-8, "{report:?}");
}

struct SquaredNorm;

impl Objective for SquaredNorm {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        Ok(vec![T::dot(&params[0], &params[0])])
    }
}

#[test]
fn squared_norm_gradient_is_twice_theta() {
    let theta = vec![0.5, -1.25, 3.0, 0.0];
    let (loss, grads) =
        evaluate_with_gradient(&SquaredNorm, &[tensor("theta", theta.clone())]).unwrap();
    assert_eq!(loss, 0.25 + 1.5625 + 9.0);
    let expected: Vec<f64> = theta.iter().map(|x| 2.0 * x).collect();
    assert_eq!(grads.tensors()[0].data, expected);
}

struct MobiusChain {
    depth: usize,
    c: f64,
}

impl Objective for MobiusChain {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        let mut z = params[0].clone();
        for i in 0..self.depth {
            z = ops::mobius_add(&z, &params[1 + i % 2], self.c);
        }
        let o = vec![T::cst(0.0); z.len()];
        Ok(vec![ops::distance(&o, &z, self.c)])
    }
}

#[test]
fn mobius_chain_of_depth_five_passes_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = vec![
        tensor("a", random_ball_point(&mut rng, 4, 1.0, 0.4)),
        tensor("b", random_ball_point(&mut rng, 4, 1.0, 0.3)),
        tensor("c", random_ball_point(&mut rng, 4, 1.0, 0.3)),
    ];
    let program = MobiusChain { depth: 5, c: 1.0 };
    let report = finite_difference_check(&program, &params, 1e-5, 3).unwrap();
    assert!(report.max_rel_error() <= 1e-4, "{report:?}");
    let names: Vec<&str> = report.entries.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["a", "b", "c"]);
}

#[test]
fn loss_is_bit_identical_to_plain_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = vec![
        tensor("a", random_ball_point(&mut rng, 5, 2.0, 0.8)),
        tensor("b", random_ball_point(&mut rng, 5, 2.0, 0.8)),
        tensor("c", random_ball_point(&mut rng, 5, 2.0, 0.8)),
    ];
    let program = MobiusChain { depth: 7, c: 2.0 };
    let plain = evaluate(&program, &params).unwrap()[0];
    let (loss, g1) = evaluate_with_gradient(&program, &params).unwrap();
    assert_eq!(plain.to_bits(), loss.to_bits());
    let (loss2, g2) = evaluate_with_gradient(&program, &params).unwrap();
    assert_eq!(loss.to_bits(), loss2.to_bits());
    assert_eq!(g1, g2);
}

struct Pair;

impl Objective for Pair {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        Ok(params[0].clone())
    }
}

#[test]
fn non_scalar_root_is_rejected() {
    let err = evaluate_with_gradient(&Pair, &[tensor("x", vec![1.0, 2.0])]).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
}

struct LogOf;

impl Objective for LogOf {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        let s = T::sum(&params[0]);
        Ok(vec![s.ln() * 0.0 + s])
    }
}

#[test]
fn non_finite_intermediate_names_the_node() {
    let err = evaluate_with_gradient(&LogOf, &[tensor("x", vec![-1.0, 0.5])]).unwrap_err();
    match err {
        Error::NumericalFailure(msg) => {
            assert!(msg.contains("node") && msg.contains("Ln"), "{msg}")
        }
        other => panic!("unexpected {other}"),
    }
}

struct TaskLoss {
    target: Vec<f64>,
    c: f64,
}

impl Objective for TaskLoss {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        let t: Vec<T> = self.target.iter().map(|&v| T::cst(v)).collect();
        let moved = ops::mobius_matvec(&params[1], 3, 3, &params[0], self.c);
        Ok(vec![ops::distance(&moved, &t, self.c)])
    }
}

struct SumOf<'a>(&'a [TaskLoss]);

impl Objective for SumOf<'_> {
    fn evaluate<T: Real>(&self, params: &[Vec<T>]) -> Result<Vec<T>> {
        let mut parts = Vec::new();
        for task in self.0 {
            parts.push(task.evaluate(params)?[0]);
        }
        Ok(vec![T::sum(&parts)])
    }
}

#[test]
fn gradient_of_sum_is_sum_of_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = vec![
        tensor("x", random_ball_point(&mut rng, 3, 1.0, 0.6)),
        tensor("w", (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()),
    ];
    let tasks: Vec<TaskLoss> = (0..4)
        .map(|_| TaskLoss {
            target: random_ball_point(&mut rng, 3, 1.0, 0.6),
            c: 1.0,
        })
        .collect();
    let (_, total) = evaluate_with_gradient(&SumOf(&tasks), &params).unwrap();
    let mut acc = GradientBundle::zeros_like(&params);
    for t in &tasks {
        let (_, g) = evaluate_with_gradient(t, &params).unwrap();
        acc.add_assign(&g).unwrap();
    }
    assert!(total.max_abs_diff(&acc) <= 1e-10);
}

#[test]
fn constants_never_touch_the_tape() {
    let tape = Tape::new();
    let a = Var::constant(2.0);
    let b = Var::constant(3.0);
    let c = (a * b).tanh() + 1.0;
    assert!(c.is_constant());
    assert!(tape.is_empty());
    let x = tape.var(0.5);
    let y = x * a + b;
    assert_eq!(tape.len(), 3);
    let g = tape.backward(y);
    assert_eq!(g.wrt(x), 2.0);
    assert_eq!(g.wrt(a), 0.0);
}

#[test]
fn clamp_blocks_gradient_outside_interval() {
    let tape = Tape::new();
    let x = tape.var(2.0);
    let y = x.clamp_to(-1.0, 1.0) * x;
    let g = tape.backward(y);
    assert_eq!(y.value(), 2.0);
    assert_eq!(g.wrt(x), 1.0);
    let z = tape.var(0.5);
    let w = z.clamp_to(-1.0, 1.0).relu();
    assert_eq!(tape.backward(w).wrt(z), 1.0);
}

#[test]
fn finite_difference_rejects_bad_step() {
    assert!(finite_difference_check(&SquaredNorm, &[tensor("t", vec![1.0])], 0.0, 0).is_err());
}

#[test]
fn finite_difference_subsamples_large_tensors() {
    let params = [tensor("big", (0..500).map(|i| i as f64 * 1e-3).collect())];
    let report = finite_difference_check(&SquaredNorm, &params, 1e-5, 9).unwrap();
    assert_eq!(report.entries[0].checked, 200);
    assert!(report.passes(1e-4, 1e-6));
}
