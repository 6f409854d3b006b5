use voxtrav_core::Traversability;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::unet::NUM_CLASSES;

/// Mean softmax cross-entropy over labelled sites and its gradient with
/// respect to the logits. Unlabelled sites get exactly zero gradient.
pub fn masked_cross_entropy<T: Real>(logits: &[T], labels: &[Option<Traversability>]) -> Result<(f64, Vec<T>)> {
    if logits.len() != labels.len() * NUM_CLASSES {
        return Err(Error::Shape(format!(
            "{} logits for {} sites",
            logits.len(),
            labels.len()
        )));
    }
    let n = labels.iter().filter(|l| l.is_some()).count();
    if n == 0 {
        return Err(Error::NoLabels);
    }
    let mut loss = 0.0;
    let mut grad = vec![T::zero(); logits.len()];
    let scale = 1.0 / n as f64;
    for (s, label) in labels.iter().enumerate() {
        let Some(label) = label else { continue };
        let row = &logits[s * NUM_CLASSES..(s + 1) * NUM_CLASSES];
        let max = row.iter().map(|v| v.f64()).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v.f64() - max).exp()).sum();
        let lse = max + sum.ln();
        let y = label.class_index();
        loss += lse - row[y].f64();
        for c in 0..NUM_CLASSES {
            let p = (row[c].f64() - lse).exp();
            let target = if c == y { 1.0 } else { 0.0 };
            grad[s * NUM_CLASSES + c] = T::of((p - target) * scale);
        }
    }
    Ok((loss * scale, grad))
}

/// Argmax class with exact ties resolved to non-traversable.
pub fn decide(logits: &[f32]) -> Traversability {
    if logits[1] > logits[0] {
        Traversability::Traversable
    } else {
        Traversability::NonTraversable
    }
}
