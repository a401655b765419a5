use crate::chunking::Chunking;
use crate::document::Document;
use crate::tokens::TokenCounter;

/// One chunk per page: cut at every page break strictly inside the document.
pub fn chunk_by_pages(doc: &Document, counter: &dyn TokenCounter) -> Chunking {
    Chunking::from_cuts(doc, doc.page_breaks.iter().copied(), "page", counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunking::interior_boundaries;
    use crate::document::{BlockKind, Sidecar};
    use crate::tokens::WhitespaceCounter;

    fn doc_with_breaks(len: usize, breaks: Vec<usize>) -> Document {
        Document::new(
            "d",
            "x".repeat(len),
            Sidecar {
                blocks: vec![(0, len, BlockKind::Paragraph)],
                page_breaks: Some(breaks),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn no_breaks_single_chunk() {
        let c = chunk_by_pages(&doc_with_breaks(100, vec![]), &WhitespaceCounter);
        assert_eq!(c.len(), 1);
        assert_eq!((c.chunks[0].start, c.chunks[0].end), (0, 100));
    }

    #[test]
    fn cuts_at_each_break() {
        let doc = doc_with_breaks(100, vec![40, 80]);
        let c = chunk_by_pages(&doc, &WhitespaceCounter);
        let spans: Vec<_> = c.chunks.iter().map(|c| (c.start, c.end)).collect();
        assert_eq!(spans, vec![(0, 40), (40, 80), (80, 100)]);
        let b: Vec<usize> = interior_boundaries(&c).into_iter().collect();
        assert_eq!(b, doc.page_breaks);
    }
}
