//! Poincaré-ball gyrovector algebra.
//!
//! The ball of curvature `c` is the open set `{x : √c‖x‖ < 1}`. Points are
//! carried as [`BallPoint`] values that always satisfy that invariant; every
//! operation re-projects its output with [`project_to_ball`] semantics
//! (boundary margin `ε = 1e-5`).
//!
//! ```
//! use hgram::hyperbolic::{mobius_add, BallPoint, Curvature};
//!
//! let c = Curvature::new(1.0).unwrap();
//! let x = BallPoint::new(vec![0.3, 0.0], c).unwrap();
//! let y = BallPoint::new(vec![0.4, 0.0], c).unwrap();
//! let z = mobius_add(&x, &y).unwrap();
//! assert!((z.coords()[0] - 0.625).abs() < 1e-12);
//! ```

pub mod ops;
mod real;

use serde::{Deserialize, Serialize};

pub use real::Real;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Curvature magnitude `c > 0`; the ball radius is `1/√c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Curvature(c))
        } else {
            Err(Error::invalid(format!(
                "curvature must be positive and finite, got {c}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn radius(self) -> f64 {
        1.0 / self.0.sqrt()
    }
}

impl Default for Curvature {
    fn default() -> Self {
        Curvature(1.0)
    }
}

impl TryFrom<f64> for Curvature {
    type Error = Error;
    fn try_from(c: f64) -> Result<Self> {
        Curvature::new(c)
    }
}

impl From<Curvature> for f64 {
    fn from(c: Curvature) -> f64 {
        c.0
    }
}

/// A point strictly inside the Poincaré ball.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
    curvature: Curvature,
}

impl BallPoint {
    /// Validates finiteness and `√c‖x‖ < 1`. Use [`project_to_ball`] to clamp
    /// arbitrary vectors instead.
    pub fn new(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        check_finite(&coords)?;
        let n = ops::norm(&coords);
        if n * curvature.value().sqrt() >= 1.0 {
            return Err(Error::invalid(format!(
                "point of norm {n} lies outside the ball of radius {}",
                curvature.radius()
            )));
        }
        Ok(BallPoint { coords, curvature })
    }

    pub fn origin(dim: usize, curvature: Curvature) -> Self {
        BallPoint {
            coords: vec![0.0; dim],
            curvature,
        }
    }

    /// Wraps coordinates produced by a projecting operation.
    pub(crate) fn from_projected(coords: Vec<f64>, curvature: Curvature) -> Self {
        debug_assert!(
            ops::norm(&coords) * curvature.value().sqrt() < 1.0,
            "projected point escaped the ball"
        );
        BallPoint { coords, curvature }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        ops::norm(&self.coords)
    }

    pub fn negate(&self) -> BallPoint {
        BallPoint {
            coords: ops::neg(&self.coords),
            curvature: self.curvature,
        }
    }
}

/// A vector in the tangent space at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    coords: Vec<f64>,
    base: BallPoint,
}

impl TangentVector {
    pub fn new(coords: Vec<f64>, base: BallPoint) -> Result<Self> {
        check_finite(&coords)?;
        if coords.len() != base.dim() {
            return Err(Error::invalid(format!(
                "tangent vector of dimension {} at a base point of dimension {}",
                coords.len(),
                base.dim()
            )));
        }
        Ok(TangentVector { coords, base })
    }

    /// Tangent vector at the origin of the ball with the given curvature.
    pub fn at_origin(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        let base = BallPoint::origin(coords.len(), curvature);
        TangentVector::new(coords, base)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn base(&self) -> &BallPoint {
        &self.base
    }

    pub fn norm(&self) -> f64 {
        ops::norm(&self.coords)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("non-finite coordinate"))
    }
}

fn check_pair(x: &BallPoint, y: &BallPoint) -> Result<()> {
    if x.curvature != y.curvature {
        return Err(Error::invalid(format!(
            "curvature mismatch: {} vs {}",
            x.curvature.value(),
            y.curvature.value()
        )));
    }
    if x.dim() != y.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// Möbius addition `x ⊕_c y`.
pub fn mobius_add(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    check_pair(x, y)?;
    let c = x.curvature;
    Ok(BallPoint::from_projected(
        ops::mobius_add(&x.coords, &y.coords, c.value()),
        c,
    ))
}

/// Möbius subtraction `x ⊖_c y = x ⊕_c (−y)`.
pub fn mobius_sub(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    mobius_add(x, &y.negate())
}

/// Exponential map at `base`. `v` must live in the tangent space at `base`.
pub fn exp_map(base: &BallPoint, v: &TangentVector) -> Result<BallPoint> {
    if v.base != *base {
        return Err(Error::invalid(
            "tangent vector is attached to a different base point",
        ));
    }
    let c = base.curvature;
    Ok(BallPoint::from_projected(
        ops::exp_map(&base.coords, &v.coords, c.value()),
        c,
    ))
}

/// Logarithmic map at `base`; `log_map(x, x)` is the zero tangent vector.
pub fn log_map(base: &BallPoint, y: &BallPoint) -> Result<TangentVector> {
    check_pair(base, y)?;
    let coords = ops::log_map(&base.coords, &y.coords, base.curvature.value());
    TangentVector::new(coords, base.clone())
}

/// Möbius scalar multiplication `r ⊙_c x`.
pub fn mobius_scalar(r: f64, x: &BallPoint) -> Result<BallPoint> {
    if !r.is_finite() {
        return Err(Error::invalid("non-finite scalar"));
    }
    let c = x.curvature;
    Ok(BallPoint::from_projected(
        ops::mobius_scalar(r, &x.coords, c.value()),
        c,
    ))
}

/// Möbius matrix-vector product `M ⊗_c x`; returns the origin when `Mx = 0`.
pub fn mobius_matvec(m: &Matrix, x: &BallPoint) -> Result<BallPoint> {
    if m.cols() != x.dim() {
        return Err(Error::invalid(format!(
            "matrix with {} columns applied to a point of dimension {}",
            m.cols(),
            x.dim()
        )));
    }
    let c = x.curvature;
    Ok(BallPoint::from_projected(
        ops::mobius_matvec(m.data(), m.rows(), m.cols(), &x.coords, c.value()),
        c,
    ))
}

/// Geodesic distance `(2/√c) artanh(√c ‖−x ⊕_c y‖)`.
pub fn hyperbolic_distance(x: &BallPoint, y: &BallPoint) -> Result<f64> {
    check_pair(x, y)?;
    Ok(ops::distance(&x.coords, &y.coords, x.curvature.value()))
}

/// `λ_x = 2 / (1 − c‖x‖²)`.
pub fn conformal_factor(x: &BallPoint) -> f64 {
    ops::conformal_factor(&x.coords, x.curvature.value())
}

/// `γ_x = 1 / √(1 − c‖x‖²)`.
pub fn lorentz_factor(x: &BallPoint) -> f64 {
    ops::lorentz_factor(&x.coords, x.curvature.value())
}

/// Lorentz-weighted Einstein midpoint of `points`, optionally with extra
/// nonnegative weights.
pub fn einstein_midpoint(points: &[BallPoint], weights: Option<&[f64]>) -> Result<BallPoint> {
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("einstein midpoint of an empty set"))?;
    for p in &points[1..] {
        check_pair(first, p)?;
    }
    if let Some(w) = weights {
        if w.len() != points.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} points",
                w.len(),
                points.len()
            )));
        }
        if w.iter().any(|&x| x.is_nan() || x < 0.0 || !x.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::invalid("all midpoint weights are zero"));
        }
    }
    let c = first.curvature;
    let refs: Vec<&[f64]> = points.iter().map(|p| p.coords.as_slice()).collect();
    Ok(BallPoint::from_projected(
        ops::einstein_midpoint(&refs, weights, c.value()),
        c,
    ))
}

/// Clamp a raw vector into the ball: when `√c‖x‖ ≥ 1 − ε` it is rescaled to
/// norm `(1 − ε)/√c` with `ε = 1e-5`, otherwise returned unchanged.
pub fn project_to_ball(x: &[f64], curvature: Curvature) -> Result<BallPoint> {
    check_finite(x)?;
    Ok(BallPoint::from_projected(
        ops::project(x.to_vec(), curvature.value()),
        curvature,
    ))
}

/// Scalar exponential map at the origin, `tanh(√c r)/√c`.
///
/// Scalars are treated as one-dimensional tangent vectors at the origin.
pub fn exp0_scalar(r: f64, c: Curvature) -> f64 {
    let sc = c.value().sqrt();
    ops::clamped_tanh(r * sc) / sc
}

/// Scalar logarithmic map at the origin, `artanh(√c r)/√c`.
pub fn log0_scalar(r: f64, c: Curvature) -> f64 {
    let sc = c.value().sqrt();
    ops::clamped_atanh(r * sc) / sc
}

#[cfg(test)]
mod tests;
