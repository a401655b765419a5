use super::MetricValue;
use crate::chunking::Chunking;
use crate::document::Document;
use crate::providers::{EmbeddingCache, EmbeddingProvider, ProviderError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IccOutcome {
    pub value: MetricValue,
    pub cohesive_chunks: usize,
    pub zero_vector_pairs: usize,
}

/// For each chunk, the trimmed non-empty texts of its intersections with the
/// document blocks, in order.
pub fn chunk_block_texts<'d>(chunking: &Chunking, doc: &'d Document) -> Vec<Vec<&'d str>> {
    let blocks = &doc.blocks;
    chunking
        .chunks
        .iter()
        .map(|c| {
            let first = blocks.partition_point(|b| b.end <= c.start);
            blocks[first..]
                .iter()
                .take_while(|b| b.start < c.end)
                .map(|b| doc.slice(b.start.max(c.start), b.end.min(c.end)).trim())
                .filter(|t| !t.is_empty())
                .collect()
        })
        .collect()
}

/// Mean similarity between each chunk and its block pieces, over chunks with
/// at least two pieces, clipped at 0.
pub fn intrachunk_cohesion(
    chunking: &Chunking,
    doc: &Document,
    provider: &dyn EmbeddingProvider,
) -> Result<IccOutcome, ProviderError> {
    let blocks = chunk_block_texts(chunking, doc);
    let texts = blocks
        .iter()
        .flatten()
        .copied()
        .chain((0..chunking.len()).map(|i| chunking.text(doc, i)));
    let cache = EmbeddingCache::build(provider, texts)?;
    Ok(icc_from_cache(chunking, doc, &blocks, &cache))
}

pub(super) fn icc_from_cache(
    chunking: &Chunking,
    doc: &Document,
    blocks: &[Vec<&str>],
    cache: &EmbeddingCache<'_>,
) -> IccOutcome {
    let mut per_chunk = Vec::new();
    let mut zero = 0;
    for (k, pieces) in blocks.iter().enumerate() {
        if pieces.len() < 2 {
            continue;
        }
        let v = cache.get(chunking.text(doc, k));
        let sims: Vec<f64> = pieces
            .iter()
            .filter_map(|t| cache.get(t).cosine(v))
            .collect();
        zero += pieces.len() - sims.len();
        if !sims.is_empty() {
            per_chunk.push(sims.iter().sum::<f64>() / sims.len() as f64);
        }
    }
    let value = if per_chunk.is_empty() {
        MetricValue::NotApplicable
    } else {
        MetricValue::Value((per_chunk.iter().sum::<f64>() / per_chunk.len() as f64).max(0.0))
    };
    IccOutcome {
        value,
        cohesive_chunks: per_chunk.len(),
        zero_vector_pairs: zero,
    }
}
