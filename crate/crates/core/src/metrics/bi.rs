use super::MetricValue;
use crate::chunking::{interior_boundaries, Chunking};
use crate::document::BlockSpan;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiOutcome {
    pub value: MetricValue,
    pub blocks: usize,
    pub broken: usize,
}

/// A block `[d, e)` is broken when an interior boundary `b` satisfies
/// `d + tau < b < e - tau`. BI is the share of unbroken blocks; it does not
/// apply to a document without blocks.
pub fn block_integrity(chunking: &Chunking, blocks: &[BlockSpan], tau: usize) -> BiOutcome {
    let boundaries = interior_boundaries(chunking);
    let broken = blocks
        .iter()
        .filter(|blk| {
            let lo = blk.start + tau + 1;
            match blk.end.checked_sub(tau) {
                Some(hi) if lo < hi => boundaries.range(lo..hi).next().is_some(),
                _ => false,
            }
        })
        .count();
    let value = if blocks.is_empty() {
        MetricValue::NotApplicable
    } else {
        MetricValue::Value(1.0 - broken as f64 / blocks.len() as f64)
    };
    BiOutcome {
        value,
        blocks: blocks.len(),
        broken,
    }
}
