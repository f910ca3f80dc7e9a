//! Closed-form gyrovector formulas on raw coordinate slices.
//!
//! These are the building blocks behind the typed API in the parent module
//! and behind the encoder, which runs them on tape variables. All functions
//! take the curvature magnitude `c > 0` as a plain `f64`; nothing here
//! validates dimensions (the typed layer does).

use super::real::Real;

/// Relative distance kept from the ball boundary by [`project`].
pub const BOUNDARY_EPS: f64 = 1e-5;
/// `artanh` arguments are clamped to `±ATANH_LIMIT`.
pub const ATANH_LIMIT: f64 = 1.0 - 1e-15;
/// `tanh` arguments are clamped to `±TANH_LIMIT`.
pub const TANH_LIMIT: f64 = 15.0;
/// Norms below this are treated with the small-norm limit of each formula.
pub const MIN_NORM: f64 = 1e-15;

#[inline]
pub fn clamped_tanh<T: Real>(x: T) -> T {
    x.clamp_to(-TANH_LIMIT, TANH_LIMIT).tanh()
}

#[inline]
pub fn clamped_atanh<T: Real>(x: T) -> T {
    x.clamp_to(-ATANH_LIMIT, ATANH_LIMIT).atanh()
}

/// Euclidean norm; exactly zero (with zero derivative) for the zero vector.
#[inline]
pub fn norm<T: Real>(x: &[T]) -> T {
    let sq = T::dot(x, x);
    if sq.val() == 0.0 {
        T::cst(0.0)
    } else {
        sq.sqrt()
    }
}

#[inline]
pub fn scale<T: Real>(x: &[T], s: T) -> Vec<T> {
    x.iter().map(|&v| v * s).collect()
}

#[inline]
pub fn neg<T: Real>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| -v).collect()
}

pub fn max_norm(c: f64) -> f64 {
    (1.0 - BOUNDARY_EPS) / c.sqrt()
}

/// Rescale `x` onto the shell of radius `(1 − ε)/√c` when it sits on or
/// beyond it; otherwise return it unchanged.
pub fn project<T: Real>(x: Vec<T>, c: f64) -> Vec<T> {
    let n = norm(&x);
    let limit = max_norm(c);
    if n.val() >= limit {
        let s = T::cst(limit) / n;
        x.into_iter().map(|v| v * s).collect()
    } else {
        x
    }
}

pub fn mobius_add<T: Real>(x: &[T], y: &[T], c: f64) -> Vec<T> {
    let xy = T::dot(x, y);
    let x2 = T::dot(x, x);
    let y2 = T::dot(y, y);
    let a = T::cst(1.0) + xy * (2.0 * c) + y2 * c;
    let b = T::cst(1.0) - x2 * c;
    let den = (T::cst(1.0) + xy * (2.0 * c) + x2 * y2 * (c * c)).clamp_to(MIN_NORM, f64::MAX);
    let out = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (a * xi + b * yi) / den)
        .collect();
    project(out, c)
}

pub fn conformal_factor<T: Real>(x: &[T], c: f64) -> T {
    let x2 = T::dot(x, x);
    T::cst(2.0) / (T::cst(1.0) - x2 * c).clamp_to(MIN_NORM, f64::MAX)
}

pub fn lorentz_factor<T: Real>(x: &[T], c: f64) -> T {
    let x2 = T::dot(x, x);
    T::cst(1.0) / (T::cst(1.0) - x2 * c).clamp_to(MIN_NORM, f64::MAX).sqrt()
}

/// `exp_0^c(v) = tanh(√c‖v‖) v / (√c‖v‖)`.
pub fn exp0<T: Real>(v: &[T], c: f64) -> Vec<T> {
    let n = norm(v);
    if n.val() < MIN_NORM {
        return project(v.to_vec(), c);
    }
    let sc = c.sqrt();
    let coef = clamped_tanh(n * sc) / (n * sc);
    project(scale(v, coef), c)
}

/// `log_0^c(y) = artanh(√c‖y‖) y / (√c‖y‖)`.
pub fn log0<T: Real>(y: &[T], c: f64) -> Vec<T> {
    let n = norm(y);
    if n.val() < MIN_NORM {
        return y.to_vec();
    }
    let sc = c.sqrt();
    let coef = clamped_atanh(n * sc) / (n * sc);
    scale(y, coef)
}

/// `exp_x^c(v) = x ⊕_c (tanh(√c λ_x ‖v‖ / 2) v / (√c‖v‖))`.
pub fn exp_map<T: Real>(x: &[T], v: &[T], c: f64) -> Vec<T> {
    let lambda = conformal_factor(x, c);
    let n = norm(v);
    let second = if n.val() < MIN_NORM {
        scale(v, lambda * 0.5)
    } else {
        let sc = c.sqrt();
        let coef = clamped_tanh(lambda * n * (sc * 0.5)) / (n * sc);
        scale(v, coef)
    };
    mobius_add(x, &second, c)
}

/// `log_x^c(y) = 2/(√c λ_x) · artanh(√c‖−x ⊕ y‖) · (−x ⊕ y)/‖−x ⊕ y‖`.
pub fn log_map<T: Real>(x: &[T], y: &[T], c: f64) -> Vec<T> {
    let lambda = conformal_factor(x, c);
    let sub = mobius_add(&neg(x), y, c);
    let n = norm(&sub);
    if n.val() < MIN_NORM {
        return scale(&sub, T::cst(2.0) / lambda);
    }
    let sc = c.sqrt();
    let coef = clamped_atanh(n * sc) * 2.0 / (lambda * n * sc);
    scale(&sub, coef)
}

/// `r ⊙_c x = exp_0(r · log_0(x))`.
pub fn mobius_scalar<T: Real>(r: T, x: &[T], c: f64) -> Vec<T> {
    let t = log0(x, c);
    exp0(&scale(&t, r), c)
}

/// Plain matrix-vector product of a row-major `rows × cols` matrix.
pub fn matvec<T: Real>(m: &[T], rows: usize, cols: usize, x: &[T]) -> Vec<T> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    (0..rows)
        .map(|r| T::dot(&m[r * cols..(r + 1) * cols], x))
        .collect()
}

/// `M ⊗_c x = (1/√c) tanh(‖Mx‖/‖x‖ · artanh(√c‖x‖)) · Mx/‖Mx‖`.
///
/// `Mx = 0` maps to the origin; `x → 0` uses the limit `Mx`.
pub fn mobius_matvec<T: Real>(m: &[T], rows: usize, cols: usize, x: &[T], c: f64) -> Vec<T> {
    let mx = matvec(m, rows, cols, x);
    let xn = norm(x);
    let mxn = norm(&mx);
    if xn.val() < MIN_NORM || mxn.val() < MIN_NORM {
        return project(mx, c);
    }
    let sc = c.sqrt();
    let inner = mxn / xn * clamped_atanh(xn * sc);
    let coef = clamped_tanh(inner) / (mxn * sc);
    project(scale(&mx, coef), c)
}

/// `d_c(x, y) = (2/√c) artanh(√c ‖−x ⊕_c y‖)`.
pub fn distance<T: Real>(x: &[T], y: &[T], c: f64) -> T {
    let sub = mobius_add(&neg(x), y, c);
    let sc = c.sqrt();
    clamped_atanh(norm(&sub) * sc) * (2.0 / sc)
}

/// Lorentz-weighted midpoint `Σ γᵢwᵢxᵢ / Σ γᵢwᵢ`, accumulated in slice
/// order. A single unweighted point is returned as is.
pub fn einstein_midpoint<T: Real>(points: &[&[T]], weights: Option<&[f64]>, c: f64) -> Vec<T> {
    assert!(!points.is_empty(), "einstein_midpoint of an empty set");
    if points.len() == 1 && weights.is_none() {
        return points[0].to_vec();
    }
    let dim = points[0].len();
    let mut coefs = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let g = lorentz_factor(p, c);
        coefs.push(match weights {
            Some(w) => g * w[i],
            None => g,
        });
    }
    let total = T::sum(&coefs);
    let mut out = Vec::with_capacity(dim);
    let mut column = Vec::with_capacity(points.len());
    for j in 0..dim {
        column.clear();
        column.extend(points.iter().map(|p| p[j]));
        out.push(T::dot(&coefs, &column) / total);
    }
    project(out, c)
}
