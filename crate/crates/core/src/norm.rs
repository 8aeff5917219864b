//! Vector and matrix norms used throughout the crate.
//!
//! Vectors use the Euclidean norm, matrices the norm it induces (the
//! spectral norm, i.e. the largest singular value).

use nalgebra::{DMatrix, DVector};

/// Euclidean norm accumulated with `hypot`, so it neither overflows nor
/// flushes to zero for entries far outside `[1e-154, 1e154]`.
///
/// Long simulations drive states into the subnormal range; a plain
/// `sqrt(sum of squares)` would report zero there long before the state is.
pub fn euclidean(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, &x| acc.hypot(x))
}

pub fn vec_norm(v: &DVector<f64>) -> f64 {
    euclidean(v.as_slice())
}

/// Induced 2-norm (largest singular value). Zero for empty matrices.
pub fn induced_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0_f64, f64::max)
}
