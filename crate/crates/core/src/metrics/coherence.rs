use std::ops::Range;

use super::{MetricConfig, MetricValue};
use crate::chunking::Chunking;
use crate::document::Document;
use crate::providers::{EmbeddingCache, EmbeddingProvider, ProviderError};

/// A run of at least two consecutive chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub chunks: Range<usize>,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DccOutcome {
    pub value: MetricValue,
    pub windows: usize,
    pub zero_vector_pairs: usize,
}

/// Windows start at every `step`-th chunk and take chunks while the summed
/// token count stays within `budget`, always taking at least two. Starts with
/// fewer than two chunks left emit nothing.
pub fn build_windows(token_counts: &[usize], budget: usize, step: usize) -> Vec<Window> {
    let k = token_counts.len();
    let mut windows = Vec::new();
    let mut i = 0;
    while i + 2 <= k {
        let mut end = i + 2;
        let mut total = token_counts[i] + token_counts[i + 1];
        while end < k && total + token_counts[end] <= budget {
            total += token_counts[end];
            end += 1;
        }
        windows.push(Window {
            chunks: i..end,
            token_count: total,
        });
        i += step.max(1);
    }
    windows
}

/// Text covered by each window.
pub fn window_texts<'d>(
    chunking: &Chunking,
    doc: &'d Document,
    windows: &[Window],
) -> Vec<&'d str> {
    windows
        .iter()
        .map(|w| {
            doc.slice(
                chunking.chunks[w.chunks.start].start,
                chunking.chunks[w.chunks.end - 1].end,
            )
        })
        .collect()
}

/// Mean similarity between each window and its member chunks, averaged over
/// windows and clipped at 0.
pub fn document_contextual_coherence(
    chunking: &Chunking,
    doc: &Document,
    provider: &dyn EmbeddingProvider,
    cfg: &MetricConfig,
) -> Result<DccOutcome, ProviderError> {
    let windows = build_windows(&chunking.token_counts(), cfg.dcc_budget, cfg.window_step);
    let wtexts = window_texts(chunking, doc, &windows);
    let texts = (0..chunking.len())
        .map(|i| chunking.text(doc, i))
        .chain(wtexts.iter().copied());
    let cache = EmbeddingCache::build(provider, texts)?;
    Ok(dcc_from_cache(chunking, doc, &windows, &wtexts, &cache))
}

pub(super) fn dcc_from_cache(
    chunking: &Chunking,
    doc: &Document,
    windows: &[Window],
    wtexts: &[&str],
    cache: &EmbeddingCache<'_>,
) -> DccOutcome {
    let mut per_window = Vec::new();
    let mut zero = 0;
    for (w, text) in windows.iter().zip(wtexts) {
        let wv = cache.get(text);
        let sims: Vec<f64> = w
            .chunks
            .clone()
            .filter_map(|k| cache.get(chunking.text(doc, k)).cosine(wv))
            .collect();
        zero += w.chunks.len() - sims.len();
        if !sims.is_empty() {
            per_window.push(sims.iter().sum::<f64>() / sims.len() as f64);
        }
    }
    let value = if per_window.is_empty() {
        MetricValue::NotApplicable
    } else {
        MetricValue::Value((per_window.iter().sum::<f64>() / per_window.len() as f64).max(0.0))
    };
    DccOutcome {
        value,
        windows: per_window.len(),
        zero_vector_pairs: zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::HashEmbedder;
    use crate::tokens::WhitespaceCounter;

    fn ranges(w: &[Window]) -> Vec<Range<usize>> {
        w.iter().map(|w| w.chunks.clone()).collect()
    }

    #[test]
    fn window_accumulation() {
        assert!(build_windows(&[10], 3000, 1).is_empty());
        assert!(build_windows(&[], 3000, 1).is_empty());
        assert_eq!(
            ranges(&build_windows(&[1000; 4], 3000, 1)),
            vec![0..3, 1..4, 2..4]
        );
        assert_eq!(ranges(&build_windows(&[2500, 2500], 3000, 1)), vec![0..2]);
        assert_eq!(
            ranges(&build_windows(&[1000; 5], 3000, 2)),
            vec![0..3, 2..5]
        );
        assert_eq!(build_windows(&[1000; 4], 3000, 1)[0].token_count, 3000);
    }

    #[test]
    fn identical_chunks_are_fully_coherent() {
        let doc = Document::plain("d", "blue sky ".repeat(6));
        let c = Chunking::from_cuts(&doc, [9, 18, 27, 36, 45], "m", &WhitespaceCounter);
        let out = document_contextual_coherence(
            &c,
            &doc,
            &HashEmbedder::default(),
            &MetricConfig::default(),
        )
        .unwrap();
        assert!((out.value.value().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(out.windows, 5);
    }

    #[test]
    fn single_chunk_is_not_applicable() {
        let doc = Document::plain("d", "only one");
        let c = Chunking::from_cuts(&doc, [], "m", &WhitespaceCounter);
        let out = document_contextual_coherence(
            &c,
            &doc,
            &HashEmbedder::default(),
            &MetricConfig::default(),
        )
        .unwrap();
        assert_eq!(out.value, MetricValue::NotApplicable);
    }
}
