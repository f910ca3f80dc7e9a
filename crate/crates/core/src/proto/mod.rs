//! Hyperbolic class prototypes and distance-softmax classification.
//!
//! A prototype is the Einstein midpoint of the support encodings of its
//! class. A query encoding `e` is scored with `p_k ∝ exp(−d(e, c_k))`, and
//! the loss is `−ln p_truth`.
//!
//! ```
//! use hgram::hyperbolic::{BallPoint, Curvature};
//! use hgram::proto::{class_distribution, compute_prototypes, proto_loss};
//!
//! let c = Curvature::default();
//! let a = BallPoint::new(vec![0.5, 0.0], c).unwrap();
//! let b = BallPoint::new(vec![-0.5, 0.0], c).unwrap();
//! let protos = compute_prototypes(&[(a, 0), (b, 1)]).unwrap();
//! let p = class_distribution(&BallPoint::origin(2, c), &protos).unwrap();
//! assert!((proto_loss(&p, 0).unwrap() - 2f64.ln()).abs() < 1e-12);
//! ```

use crate::error::{Error, Result};
use crate::hyperbolic::{ops, BallPoint, Real};

/// One prototype per episode class, classes ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeTable {
    pub classes: Vec<u32>,
    pub prototypes: Vec<BallPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    pub classes: Vec<u32>,
    pub probs: Vec<f64>,
}

impl ClassDistribution {
    /// Most probable class; ties go to the smallest class id.
    pub fn argmax(&self) -> u32 {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    pub fn prob(&self, class: u32) -> Option<f64> {
        self.classes
            .iter()
            .position(|&c| c == class)
            .map(|i| self.probs[i])
    }
}

/// Midpoint of the points with `classes[i] == k`, for each `k` in
/// `0..n_classes`, accumulated in input order.
pub fn prototypes<T: Real>(
    encodings: &[Vec<T>],
    classes: &[usize],
    n_classes: usize,
    c: f64,
) -> Vec<Vec<T>> {
    (0..n_classes)
        .map(|k| {
            let members: Vec<&[T]> = encodings
                .iter()
                .zip(classes)
                .filter(|(_, &y)| y == k)
                .map(|(e, _)| e.as_slice())
                .collect();
            ops::einstein_midpoint(&members, None, c)
        })
        .collect()
}

/// `ln p_k` for every prototype, stabilized by subtracting the largest
/// logit (as a constant, which leaves the value and gradient unchanged).
pub fn log_probs<T: Real>(e: &[T], protos: &[Vec<T>], c: f64) -> Vec<T> {
    let logits: Vec<T> = protos.iter().map(|p| -ops::distance(e, p, c)).collect();
    let m = logits
        .iter()
        .map(|z| z.val())
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<T> = logits.iter().map(|&z| z - m).collect();
    let exps: Vec<T> = shifted.iter().map(|&z| z.exp()).collect();
    let lse = T::sum(&exps).ln();
    shifted.iter().map(|&z| z - lse).collect()
}

/// Softmax of `−distances`.
pub fn distribution_from_distances(distances: &[f64]) -> Vec<f64> {
    let m = distances
        .iter()
        .map(|d| -d)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = distances.iter().map(|d| (-d - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

/// Prototypes for the classes present in `encodings`.
pub fn compute_prototypes(encodings: &[(BallPoint, u32)]) -> Result<PrototypeTable> {
    let mut classes: Vec<u32> = encodings.iter().map(|(_, y)| *y).collect();
    classes.sort_unstable();
    classes.dedup();
    compute_prototypes_for(encodings, &classes)
}

/// Prototypes for an explicit class list; every class needs a member.
pub fn compute_prototypes_for(
    encodings: &[(BallPoint, u32)],
    classes: &[u32],
) -> Result<PrototypeTable> {
    let first = encodings
        .first()
        .ok_or_else(|| Error::invalid("no encodings to build prototypes from"))?;
    let (dim, c) = (first.0.dim(), first.0.curvature());
    if encodings
        .iter()
        .any(|(e, _)| e.dim() != dim || e.curvature() != c)
    {
        return Err(Error::invalid("encodings differ in dimension or curvature"));
    }
    let mut sorted = classes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let index: Vec<usize> = encodings
        .iter()
        .map(|(_, y)| sorted.binary_search(y).unwrap_or(usize::MAX))
        .collect();
    for (k, &class) in sorted.iter().enumerate() {
        if !index.contains(&k) {
            return Err(Error::invalid(format!(
                "class {class} has no support encoding"
            )));
        }
    }
    let points: Vec<Vec<f64>> = encodings.iter().map(|(e, _)| e.coords().to_vec()).collect();
    let protos = prototypes(&points, &index, sorted.len(), c.value());
    Ok(PrototypeTable {
        classes: sorted,
        prototypes: protos
            .into_iter()
            .map(|p| BallPoint::from_projected(p, c))
            .collect(),
    })
}

pub fn class_distribution(e: &BallPoint, protos: &PrototypeTable) -> Result<ClassDistribution> {
    if protos.prototypes.is_empty() {
        return Err(Error::invalid("empty prototype table"));
    }
    let p0 = &protos.prototypes[0];
    if e.dim() != p0.dim() || e.curvature() != p0.curvature() {
        return Err(Error::invalid(
            "query encoding does not match the prototypes",
        ));
    }
    let c = e.curvature().value();
    let d: Vec<f64> = protos
        .prototypes
        .iter()
        .map(|p| ops::distance(e.coords(), p.coords(), c))
        .collect();
    Ok(ClassDistribution {
        classes: protos.classes.clone(),
        probs: distribution_from_distances(&d),
    })
}

/// `−ln p_truth`.
pub fn proto_loss(p: &ClassDistribution, truth: u32) -> Result<f64> {
    let pt = p
        .prob(truth)
        .ok_or_else(|| Error::invalid(format!("class {truth} is not part of the episode")))?;
    Ok(-pt.ln())
}
