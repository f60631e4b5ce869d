//! Similarity measures shared by graph construction, search, and the oracle.
//!
//! Index-side scoring accumulates in `f32`; the exact oracle uses the `f64`
//! variants. Angular similarity is the inner product divided by both Euclidean
//! norms and is undefined for zero-norm operands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which similarity a graph or search ranks by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimilarityKind {
    InnerProduct,
    Angular,
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimilarityKind::InnerProduct => write!(f, "inner-product"),
            SimilarityKind::Angular => write!(f, "angular"),
        }
    }
}

/// Inner product with 32-bit accumulation (the index scoring path).
pub fn dot_f32(x: &[f32], y: &[f32]) -> f32 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Inner product with 64-bit accumulation (the oracle scoring path).
pub fn dot_f64(x: &[f32], y: &[f32]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| *a as f64 * *b as f64).sum()
}

fn norm_f32(x: &[f32]) -> f32 {
    dot_f32(x, x).sqrt()
}

/// Scores a pair of vectors under `kind`. Checks dimensions and, under angular
/// similarity, rejects zero-norm operands.
pub fn similarity(kind: SimilarityKind, x: &[f32], y: &[f32]) -> Result<f32> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    match kind {
        SimilarityKind::InnerProduct => Ok(dot_f32(x, y)),
        SimilarityKind::Angular => {
            let nx = norm_f32(x);
            let ny = norm_f32(y);
            if nx == 0.0 || ny == 0.0 {
                return Err(Error::ZeroNorm("free vector".into()));
            }
            Ok(dot_f32(x, y) / (nx * ny))
        }
    }
}
