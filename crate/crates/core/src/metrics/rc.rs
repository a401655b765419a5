use std::ops::Bound::{Excluded, Included};

use super::MetricValue;
use crate::chunking::{interior_boundaries, Chunking};
use crate::document::EntityPronounPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcOutcome {
    pub value: MetricValue,
    pub pairs: usize,
    pub severed: usize,
}

/// A pair `(s, t)` is severed when some interior boundary `b` has `s < b <= t`.
/// RC is the share of pairs not severed; without pairs it does not apply.
pub fn references_completeness(chunking: &Chunking, pairs: &[EntityPronounPair]) -> RcOutcome {
    let boundaries = interior_boundaries(chunking);
    let severed = pairs
        .iter()
        .filter(|p| {
            p.entity_start < p.pronoun_end
                && boundaries
                    .range((Excluded(p.entity_start), Included(p.pronoun_end)))
                    .next()
                    .is_some()
        })
        .count();
    let value = if pairs.is_empty() {
        MetricValue::NotApplicable
    } else {
        MetricValue::Value(1.0 - severed as f64 / pairs.len() as f64)
    };
    RcOutcome {
        value,
        pairs: pairs.len(),
        severed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Document;
    use crate::tokens::WhitespaceCounter;

    fn chunking(len: usize, cuts: &[usize]) -> Chunking {
        let doc = Document::plain("d", "x".repeat(len));
        Chunking::from_cuts(&doc, cuts.iter().copied(), "m", &WhitespaceCounter)
    }

    #[test]
    fn no_pairs_is_not_applicable() {
        assert_eq!(
            references_completeness(&chunking(10, &[5]), &[]).value,
            MetricValue::NotApplicable
        );
    }

    #[test]
    fn single_chunk_keeps_every_pair() {
        let pairs = [EntityPronounPair::new(0, 20), EntityPronounPair::new(3, 9)];
        assert_eq!(
            references_completeness(&chunking(30, &[]), &pairs).value,
            MetricValue::Value(1.0)
        );
    }

    #[test]
    fn boundary_positions() {
        let pair = [EntityPronounPair::new(0, 20)];
        for (cut, expected) in [(16, 0.0), (20, 0.0), (21, 1.0), (1, 0.0)] {
            let out = references_completeness(&chunking(30, &[cut]), &pair);
            assert_eq!(out.value, MetricValue::Value(expected), "cut at {cut}");
        }
    }

    #[test]
    fn partial_severing() {
        let pairs = [
            EntityPronounPair::new(0, 5),
            EntityPronounPair::new(10, 20),
            EntityPronounPair::new(12, 14),
        ];
        let out = references_completeness(&chunking(30, &[13]), &pairs);
        assert_eq!(out.severed, 2);
        assert!((out.value.value().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}
