//! Sentence-embedding providers.
//!
//! A provider maps texts to unit-norm vectors of a fixed dimension. The real
//! model runs in the HTTP sidecar ([`crate::sidecar::SidecarClient`]); the
//! [`MockEmbedder`] here is a deterministic hashed bag-of-words used by tests
//! and by `--provider mock`.

use crate::error::{Error, Result};
use crate::normalize::tokenize;

pub type Embedding = Vec<f32>;

/// Tolerance on the unit norm of provider output.
pub const NORM_TOLERANCE: f64 = 1e-4;

pub trait EmbeddingProvider: Sync {
    /// One unit vector per input text, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        (**self).embed(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        (**self).embed(texts)
    }
}

/// Checks the provider contract on one batch: count, shared dimension, unit norm.
pub fn check_batch(texts: &[String], vectors: &[Embedding]) -> std::result::Result<(), String> {
    if vectors.len() != texts.len() {
        return Err(format!("expected {} vectors, got {}", texts.len(), vectors.len()));
    }
    let dim = vectors.first().map_or(0, Vec::len);
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim || dim == 0 {
            return Err(format!("vector {i} has dimension {} (expected {dim})", v.len()));
        }
        let norm = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(format!("vector {i} has norm {norm}"));
        }
    }
    Ok(())
}

/// Cosine distance `1 - cos(a, b)`, accumulated in f64 and clamped at zero.
pub fn cosine_distance(a: &[f32], b: &[f32]) -> f64 {
    // Renormalized in f64 so that identical vectors are at distance exactly 0
    // despite f32 rounding of their norms.
    let dot = |u: &[f32], v: &[f32]| -> f64 { u.iter().zip(v).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum() };
    let norm = (dot(a, a) * dot(b, b)).sqrt();
    if norm == 0.0 {
        return 1.0;
    }
    (1.0 - dot(a, b) / norm).max(0.0)
}

/// 64-bit FNV-1a.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hashed bag-of-words embedder.
///
/// Each lowercase token adds ±1 to the coordinate picked by its hash; the sum
/// is L2-normalized. Texts with no tokens (or whose contributions cancel) map
/// to the first basis vector.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dim: usize,
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        MockEmbedder { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed_one(&self, text: &str) -> Embedding {
        let mut v = vec![0f64; self.dim];
        for tok in tokenize(text) {
            let h = fnv1a(tok.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            let mut e = vec![0f32; self.dim];
            e[0] = 1.0;
            return e;
        }
        v.iter().map(|x| (x / norm) as f32).collect()
    }
}

impl Default for MockEmbedder {
    fn default() -> Self {
        MockEmbedder::new(64)
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Wraps provider failures with the batch they happened in.
pub(crate) fn embedding_error(batch: usize, err: impl std::fmt::Display) -> Error {
    Error::Embedding {
        batch,
        message: err.to_string(),
    }
}
