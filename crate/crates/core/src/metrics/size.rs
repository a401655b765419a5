use super::{MetricError, MetricValue};
use crate::chunking::Chunking;
use crate::postprocess::SizeBounds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScOutcome {
    pub value: MetricValue,
    pub compliant: usize,
    pub chunks: usize,
}

/// Share of chunks with `min <= tokens <= max`, using the stored token counts.
pub fn size_compliance(chunking: &Chunking, bounds: &SizeBounds) -> Result<ScOutcome, MetricError> {
    if chunking.is_empty() {
        return Err(MetricError::EmptyChunking);
    }
    let compliant = chunking
        .chunks
        .iter()
        .filter(|c| bounds.is_compliant(c.token_count))
        .count();
    Ok(ScOutcome {
        value: MetricValue::Value(compliant as f64 / chunking.len() as f64),
        compliant,
        chunks: chunking.len(),
    })
}
