use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::hyperbolic::Real;

/// Primitive recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sqrt,
    Tanh,
    Atanh,
    Exp,
    Ln,
    Relu,
    Clamp,
    Dot,
    Sum,
}

#[derive(Default)]
struct Inner {
    // Per node: offset into `parents`/`partials` and parent count.
    spans: Vec<(u32, u32)>,
    values: Vec<f64>,
    ops: Vec<Op>,
    parents: Vec<u32>,
    partials: Vec<f64>,
    first_nonfinite: Option<u32>,
}

impl Inner {
    fn push(&mut self, op: Op, value: f64) -> u32 {
        let idx = self.values.len() as u32;
        self.spans.push((self.parents.len() as u32, 0));
        self.values.push(value);
        self.ops.push(op);
        if !value.is_finite() && self.first_nonfinite.is_none() {
            self.first_nonfinite = Some(idx);
        }
        idx
    }

    #[inline]
    fn edge(&mut self, node: u32, parent: u32, partial: f64) {
        self.parents.push(parent);
        self.partials.push(partial);
        self.spans[node as usize].1 += 1;
    }
}

/// Append-only record of primitive operations for reverse-mode
/// differentiation.
///
/// Nodes are created in evaluation order, so every node's inputs precede it
/// and the recorded graph is acyclic by construction.
#[derive(Default)]
pub struct Tape {
    inner: RefCell<Inner>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// A differentiable leaf.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.inner.borrow_mut().push(Op::Leaf, value);
        Var {
            tape: Some(self),
            idx,
            val: value,
        }
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fails with the first node that produced a NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        let inner = self.inner.borrow();
        match inner.first_nonfinite {
            None => Ok(()),
            Some(i) => Err(Error::NumericalFailure(format!(
                "tape node {i} ({:?}) produced {}",
                inner.ops[i as usize], inner.values[i as usize]
            ))),
        }
    }

    /// Adjoints of every node with respect to `root`.
    pub fn backward(&self, root: Var<'_>) -> Gradients {
        let inner = self.inner.borrow();
        let mut adj = vec![0.0; inner.values.len()];
        let Some(tape) = root.tape else {
            return Gradients { adjoints: adj };
        };
        assert!(std::ptr::eq(tape, self), "root belongs to a different tape");
        adj[root.idx as usize] = 1.0;
        for node in (0..=root.idx as usize).rev() {
            let a = adj[node];
            if a == 0.0 {
                continue;
            }
            let (start, len) = inner.spans[node];
            let range = start as usize..(start + len) as usize;
            for (p, d) in inner.parents[range.clone()]
                .iter()
                .zip(&inner.partials[range])
            {
                adj[*p as usize] += d * a;
            }
        }
        Gradients { adjoints: adj }
    }

    fn record1(&self, op: Op, value: f64, a: u32, da: f64) -> u32 {
        let mut inner = self.inner.borrow_mut();
        let idx = inner.push(op, value);
        inner.edge(idx, a, da);
        idx
    }
}

/// Result of a backward pass.
pub struct Gradients {
    adjoints: Vec<f64>,
}

impl Gradients {
    /// Derivative of the root with respect to `v` (zero for constants).
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        match v.tape {
            Some(_) => self.adjoints[v.idx as usize],
            None => 0.0,
        }
    }

    pub fn wrt_all(&self, vs: &[Var<'_>]) -> Vec<f64> {
        vs.iter().map(|&v| self.wrt(v)).collect()
    }
}

/// A scalar that is either a constant or a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: u32,
    val: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tape {
            Some(_) => write!(f, "Var(#{}: {})", self.idx, self.val),
            None => write!(f, "Const({})", self.val),
        }
    }
}

impl<'t> Var<'t> {
    pub fn constant(val: f64) -> Self {
        Var {
            tape: None,
            idx: 0,
            val,
        }
    }

    pub fn value(&self) -> f64 {
        self.val
    }

    pub fn is_constant(&self) -> bool {
        self.tape.is_none()
    }

    fn unary(self, op: Op, value: f64, d: f64) -> Self {
        match self.tape {
            None => Var::constant(value),
            Some(t) => Var {
                tape: Some(t),
                idx: t.record1(op, value, self.idx, d),
                val: value,
            },
        }
    }

    fn binary(self, other: Self, op: Op, value: f64, da: f64, db: f64) -> Self {
        let tape = match (self.tape, other.tape) {
            (None, None) => return Var::constant(value),
            (Some(t), None) | (None, Some(t)) => t,
            (Some(a), Some(b)) => {
                debug_assert!(std::ptr::eq(a, b), "mixing variables of two tapes");
                a
            }
        };
        let mut inner = tape.inner.borrow_mut();
        let idx = inner.push(op, value);
        if self.tape.is_some() {
            inner.edge(idx, self.idx, da);
        }
        if other.tape.is_some() {
            inner.edge(idx, other.idx, db);
        }
        drop(inner);
        Var {
            tape: Some(tape),
            idx,
            val: value,
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Add, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Sub, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Mul, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        self.binary(rhs, Op::Div, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(Op::Neg, -self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.unary(Op::Add, self.val + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.unary(Op::Sub, self.val - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.unary(Op::Mul, self.val * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(Op::Div, self.val / rhs, 1.0 / rhs)
    }
}

impl<'t> Real for Var<'t> {
    fn cst(v: f64) -> Self {
        Var::constant(v)
    }

    fn val(self) -> f64 {
        self.val
    }

    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.unary(Op::Sqrt, s, 0.5 / s)
    }

    fn tanh(self) -> Self {
        let t = self.val.tanh();
        self.unary(Op::Tanh, t, 1.0 - t * t)
    }

    fn atanh(self) -> Self {
        let x = self.val;
        self.unary(Op::Atanh, x.atanh(), 1.0 / (1.0 - x * x))
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(Op::Exp, e, e)
    }

    fn ln(self) -> Self {
        self.unary(Op::Ln, self.val.ln(), 1.0 / self.val)
    }

    fn relu(self) -> Self {
        if self.val > 0.0 {
            self.unary(Op::Relu, self.val, 1.0)
        } else {
            Var::constant(0.0)
        }
    }

    fn clamp_to(self, lo: f64, hi: f64) -> Self {
        if self.val < lo {
            Var::constant(lo)
        } else if self.val > hi {
            Var::constant(hi)
        } else {
            self
        }
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = 0.0;
        let mut tape = None;
        for (x, y) in a.iter().zip(b) {
            acc += x.val * y.val;
            tape = tape.or(x.tape).or(y.tape);
        }
        let Some(tape) = tape else {
            return Var::constant(acc);
        };
        let mut inner = tape.inner.borrow_mut();
        let idx = inner.push(Op::Dot, acc);
        for (x, y) in a.iter().zip(b) {
            if x.tape.is_some() {
                inner.edge(idx, x.idx, y.val);
            }
            if y.tape.is_some() {
                inner.edge(idx, y.idx, x.val);
            }
        }
        drop(inner);
        Var {
            tape: Some(tape),
            idx,
            val: acc,
        }
    }

    fn sum(xs: &[Self]) -> Self {
        let mut acc = 0.0;
        let mut tape = None;
        for x in xs {
            acc += x.val;
            tape = tape.or(x.tape);
        }
        let Some(tape) = tape else {
            return Var::constant(acc);
        };
        let mut inner = tape.inner.borrow_mut();
        let idx = inner.push(Op::Sum, acc);
        for x in xs {
            if x.tape.is_some() {
                inner.edge(idx, x.idx, 1.0);
            }
        }
        drop(inner);
        Var {
            tape: Some(tape),
            idx,
            val: acc,
        }
    }
}
