use super::{EmbeddingProvider, EmbeddingVector, ProviderError};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Lowercased runs of alphanumeric characters.
pub fn hash_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Bag-of-words embedder: token counts hashed into `dim` buckets, then
/// L2-normalised. Pure and platform independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let mut counts = vec![0.0; self.dim];
        for token in hash_tokens(text) {
            counts[(fnv1a64(&token) % self.dim as u64) as usize] += 1.0;
        }
        EmbeddingVector::normalized(counts)
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn name(&self) -> &str {
        "hash"
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed(t)).collect())
    }
}
