use crate::text::{fnv1a64, terms};

use super::RetrievalError;

/// Text → fixed-dimension vector. Must be deterministic.
pub trait Encoder: Send + Sync {
    /// Identifier recorded in index snapshots; two encoders with the same id
    /// must produce identical vectors.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

/// Hashed bag-of-terms with raw term-frequency weights, L2-normalized.
///
/// Each term from [`terms`] is bucketed by FNV-1a into one of `dim` slots.
/// Text with no alphanumeric terms encodes to the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedEncoder {
    dim: usize,
}

pub const DEFAULT_ENCODER_DIM: usize = 256;

impl HashedEncoder {
    pub fn new(dim: usize) -> Result<Self, RetrievalError> {
        if dim == 0 {
            return Err(RetrievalError::InvalidDimension(dim));
        }
        Ok(Self { dim })
    }

    /// Reconstruct from an [`Encoder::id`] string.
    pub fn from_id(id: &str) -> Option<Self> {
        id.strip_prefix("hashed-tf-v1-d")?.parse().ok().and_then(|d| Self::new(d).ok())
    }
}

impl Default for HashedEncoder {
    fn default() -> Self {
        Self { dim: DEFAULT_ENCODER_DIM }
    }
}

impl Encoder for HashedEncoder {
    fn id(&self) -> String {
        format!("hashed-tf-v1-d{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        if text.trim().is_empty() {
            return Err(RetrievalError::EmptyText);
        }
        let mut v = vec![0.0; self.dim];
        for t in terms(text) {
            v[(fnv1a64(t.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}
