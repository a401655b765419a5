//! Size regularisation: oversized chunks are re-split with the separator
//! cascade, then tiny chunks are merged into a neighbour.

use serde::{Deserialize, Serialize};

use crate::chunkers::SeparatorCascade;
use crate::chunking::{Chunk, Chunking};
use crate::document::Document;
use crate::tokens::TokenCounter;

pub const POSTPROCESS_SUFFIX: &str = "+pp";

/// When a tiny chunk may be merged into a neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    /// Merge if the result stays within `merge_cap`, unless that would push a
    /// neighbour that is within `[min, max]` above `max`. Never lowers size
    /// compliance and keeps [`postprocess`] idempotent.
    #[default]
    ScPreserving,
    /// Merge whenever the result stays within `merge_cap`.
    CapOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizeBounds {
    pub min: usize,
    pub max: usize,
    pub merge_cap: usize,
    pub merge_policy: MergePolicy,
}

impl Default for SizeBounds {
    fn default() -> Self {
        Self {
            min: 100,
            max: 1100,
            merge_cap: 1150,
            merge_policy: MergePolicy::ScPreserving,
        }
    }
}

impl SizeBounds {
    pub fn validate(&self) -> Result<(), String> {
        if self.min == 0 || self.min >= self.max || self.max > self.merge_cap {
            return Err(format!(
                "size bounds must satisfy 0 < min < max <= merge_cap (got {}, {}, {})",
                self.min, self.max, self.merge_cap
            ));
        }
        Ok(())
    }

    pub fn is_compliant(&self, tokens: usize) -> bool {
        self.min <= tokens && tokens <= self.max
    }

    /// Whether a tiny chunk may merge into a neighbour of `neighbour` tokens,
    /// producing a chunk of `combined` tokens.
    pub fn can_merge(&self, neighbour: usize, combined: usize) -> bool {
        if combined > self.merge_cap {
            return false;
        }
        match self.merge_policy {
            MergePolicy::CapOnly => true,
            MergePolicy::ScPreserving => combined <= self.max || neighbour > self.max,
        }
    }
}

/// Replace every chunk above `bounds.max` by its cascade split; other chunks
/// are left untouched.
pub fn resplit_oversized(
    chunking: &Chunking,
    doc: &Document,
    bounds: &SizeBounds,
    cascade: &SeparatorCascade,
    counter: &dyn TokenCounter,
) -> Chunking {
    let chunking = chunking.recounted(doc, counter);
    let mut chunks = Vec::with_capacity(chunking.chunks.len());
    for chunk in &chunking.chunks {
        if chunk.token_count <= bounds.max {
            chunks.push(chunk.clone());
            continue;
        }
        let text = doc.slice(chunk.start, chunk.end);
        let base = doc.byte_offset(chunk.start);
        let mut start = chunk.start;
        let mut overlap_start = chunk.overlap_start;
        let cuts = crate::chunkers::separator_cascade_split(text, bounds.max, cascade, counter);
        let mut byte = base;
        for piece in cuts {
            byte += piece.len();
            let end = doc.char_offset(byte);
            chunks.push(Chunk {
                start,
                end,
                token_count: counter.count(piece),
                overlap_start: overlap_start.take(),
            });
            start = end;
        }
    }
    Chunking { chunks, ..chunking }
}

/// Merge chunks below `bounds.min` into their predecessor, or failing that
/// their successor, whenever [`SizeBounds::can_merge`] allows it. Sweeps left
/// to right until nothing changes.
pub fn merge_tiny(
    chunking: &Chunking,
    doc: &Document,
    bounds: &SizeBounds,
    counter: &dyn TokenCounter,
) -> Chunking {
    let chunking = chunking.recounted(doc, counter);
    let mut chunks = chunking.chunks.clone();
    let max_passes = chunks.len() + 1;
    for _ in 0..max_passes {
        let mut changed = false;
        let mut i = 0;
        while i < chunks.len() {
            if chunks[i].token_count >= bounds.min {
                i += 1;
                continue;
            }
            if i > 0 {
                let prev = &chunks[i - 1];
                let combined = counter.count(doc.slice(prev.start, chunks[i].end));
                if bounds.can_merge(prev.token_count, combined) {
                    chunks[i - 1].end = chunks[i].end;
                    chunks[i - 1].token_count = combined;
                    chunks.remove(i);
                    changed = true;
                    continue;
                }
            }
            if i + 1 < chunks.len() {
                let next = &chunks[i + 1];
                let combined = counter.count(doc.slice(chunks[i].start, next.end));
                if bounds.can_merge(next.token_count, combined) {
                    chunks[i].end = chunks[i + 1].end;
                    chunks[i].token_count = combined;
                    chunks.remove(i + 1);
                    changed = true;
                    continue;
                }
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    Chunking { chunks, ..chunking }
}

/// Oversized re-split followed by tiny-chunk merge.
pub fn postprocess(
    chunking: &Chunking,
    doc: &Document,
    bounds: &SizeBounds,
    cascade: &SeparatorCascade,
    counter: &dyn TokenCounter,
) -> Chunking {
    let resplit = resplit_oversized(chunking, doc, bounds, cascade, counter);
    let mut out = merge_tiny(&resplit, doc, bounds, counter);
    if !out.method.ends_with(POSTPROCESS_SUFFIX) {
        out.method.push_str(POSTPROCESS_SUFFIX);
    }
    out
}
