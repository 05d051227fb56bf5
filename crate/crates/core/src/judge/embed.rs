//! Pluggable text embeddings and cosine distances between description
//! fields. The deterministic hash embedder keeps the distance pipeline
//! testable offline; a real sentence-encoder service slots in behind the
//! same trait.

use serde::{Deserialize, Serialize};

use super::JudgeError;
use crate::corpus::Project;

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, JudgeError>;
}

/// Deterministic bag-of-tokens embedding: tokens hash into `dim` buckets,
/// the count vector is L2-normalized. Input is capped at `max_tokens`
/// whitespace tokens, mirroring provider sequence limits.
pub struct HashEmbedder {
    dim: usize,
    max_tokens: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> HashEmbedder {
        HashEmbedder {
            dim,
            max_tokens: 256,
        }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(64)
    }
}

// FNV-1a; stable across platforms and releases, unlike the std hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, JudgeError> {
        let mut vector = vec![0.0; self.dim];
        for token in text
            .split_whitespace()
            .take(self.max_tokens)
            .map(|t| t.to_lowercase())
        {
            let bucket = (fnv1a(token.as_bytes()) % self.dim as u64) as usize;
            vector[bucket] += 1.0;
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut vector {
                *v /= norm;
            }
        }
        Ok(vector)
    }
}

/// Cosine similarity `u.v / (|u||v|)`; errors on a zero vector.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, JudgeError> {
    assert_eq!(u.len(), v.len(), "cosine: dimension mismatch");
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(JudgeError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Cosine similarities between description fields: inspiration vs
/// what-it-does, and requirements vs what-it-does. Missing fields yield
/// missing distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionDistances {
    pub project_id: String,
    pub cos_i_w: Option<f64>,
    pub cos_r_w: Option<f64>,
}

pub fn description_distances(
    project: &Project,
    embedder: &dyn Embedder,
) -> Result<DescriptionDistances, JudgeError> {
    let field = |key: &str| {
        project
            .description_fields
            .get(key)
            .filter(|t| !t.trim().is_empty())
    };
    let what = field("what_it_does");
    let pair = |other: Option<&String>| -> Result<Option<f64>, JudgeError> {
        match (what, other) {
            (Some(w), Some(o)) => {
                let u = embedder.embed(w)?;
                let v = embedder.embed(o)?;
                Ok(Some(cosine(&u, &v)?))
            }
            _ => Ok(None),
        }
    };
    Ok(DescriptionDistances {
        project_id: project.id.clone(),
        cos_i_w: pair(field("inspiration"))?,
        cos_r_w: pair(field("requirements"))?,
    })
}
