use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction shared by plain `f64` evaluation and the recording
/// tape in [`crate::autodiff`].
///
/// Every gyrovector formula in this crate is written once against this trait,
/// so the differentiable path performs exactly the same floating-point
/// operations, in the same order, as the plain path.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant (never differentiated).
    fn cst(v: f64) -> Self;
    /// The primal value.
    fn val(self) -> f64;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn atanh(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn relu(self) -> Self;
    /// Clamp into `[lo, hi]`. Derivative is 1 inside the interval and 0 where
    /// the clamp is active.
    fn clamp_to(self, lo: f64, hi: f64) -> Self;
    /// Left-to-right `Σ aᵢbᵢ` starting from `0.0`.
    fn dot(a: &[Self], b: &[Self]) -> Self;
    /// Left-to-right `Σ xᵢ` starting from `0.0`.
    fn sum(xs: &[Self]) -> Self;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn atanh(self) -> Self {
        f64::atanh(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }
    #[inline]
    fn clamp_to(self, lo: f64, hi: f64) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }
    #[inline]
    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = 0.0;
        for (x, y) in a.iter().zip(b) {
            acc += x * y;
        }
        acc
    }
    #[inline]
    fn sum(xs: &[Self]) -> Self {
        let mut acc = 0.0;
        for x in xs {
            acc += x;
        }
        acc
    }
}
