//! Embedding and coreference providers.
//!
//! [`HashEmbedder`] runs in process and is fully deterministic. The remote
//! providers speak a small JSON protocol:
//!
//! | request | response |
//! |---|---|
//! | `POST /embed {"texts": [..]}` | `{"dim": d, "vectors": [[..], ..]}` |
//! | `POST /coref {"text": ".."}` | `{"pairs": [{"entity_start", "pronoun_end", "entity_text", "pronoun_text"}, ..]}` |
//! | `GET /health` | `{"ok": true, "models": {..}}` |
//!
//! Offsets are character offsets into the submitted text.

mod coref;
mod hash;
mod remote;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coref::{
    pairs_from_clusters, CorefOutcome, CorefProvider, CorefRequest, CorefResponse, RemoteCoref,
    PRONOUNS,
};
pub use hash::{fnv1a64, hash_tokens, HashEmbedder};
pub use remote::{
    health, EmbedRequest, EmbedResponse, HealthResponse, HttpTransport, RemoteEmbedder,
    RemoteEmbedderConfig, Transport,
};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider response does not follow the wire protocol: {0}")]
    Protocol(String),
    #[error("provider returned vectors of dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("unknown embedding provider `{0}`")]
    Unknown(String),
}

impl ProviderError {
    /// Errors worth retrying: transport failures, throttling and server faults.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            Self::Transport(_)
                | Self::Status {
                    status: 429 | 500..=599,
                    ..
                }
        )
    }
}

/// Unit-norm vector, or the all-zero vector for text without tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// L2-normalise `raw`; a vector of norm 0 stays zero.
    pub fn normalized(mut raw: Vec<f64>) -> Self {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            raw.iter_mut().for_each(|x| *x /= norm);
        } else {
            raw.iter_mut().for_each(|x| *x = 0.0);
        }
        Self(raw)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Cosine of two normalised vectors; `None` if either is zero.
    pub fn cosine(&self, other: &Self) -> Option<f64> {
        if self.is_zero() || other.is_zero() {
            None
        } else {
            Some(self.dot(other))
        }
    }
}

/// Maps texts to embeddings. Output has the input's length and order.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

/// Embeddings of a set of texts, computed with one provider call and looked up
/// by text. Repeated texts are embedded once.
pub struct EmbeddingCache<'t> {
    index: HashMap<&'t str, usize>,
    vectors: Vec<EmbeddingVector>,
}

impl<'t> EmbeddingCache<'t> {
    pub fn build<I>(provider: &dyn EmbeddingProvider, texts: I) -> Result<Self, ProviderError>
    where
        I: IntoIterator<Item = &'t str>,
    {
        let mut index = HashMap::new();
        let mut unique = Vec::new();
        for t in texts {
            index.entry(t).or_insert_with(|| {
                unique.push(t);
                unique.len() - 1
            });
        }
        let vectors = if unique.is_empty() {
            Vec::new()
        } else {
            provider.embed_batch(&unique)?
        };
        if vectors.len() != unique.len() {
            return Err(ProviderError::CountMismatch {
                expected: unique.len(),
                got: vectors.len(),
            });
        }
        Ok(Self { index, vectors })
    }

    /// Panics if `text` was not part of the build set.
    pub fn get(&self, text: &str) -> &EmbeddingVector {
        &self.vectors[self.index[text]]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}
