//! Chunkings: ordered, contiguous, exhaustive partitions of a document.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::tokens::TokenCounter;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
    pub token_count: usize,
    /// Start of the trailing span of the previous chunk that a consumer may
    /// prepend as overlap. The hint always ends at `start`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_start: Option<usize>,
}

impl Chunk {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunking {
    pub doc_id: String,
    pub method: String,
    /// Name of the counter that produced `Chunk::token_count`.
    pub counter: String,
    pub chunks: Vec<Chunk>,
}

impl Chunking {
    /// Build a chunking by cutting `doc` at `cuts`. Cuts outside `(0, L)` and
    /// duplicates are ignored.
    pub fn from_cuts(
        doc: &Document,
        cuts: impl IntoIterator<Item = usize>,
        method: impl Into<String>,
        counter: &dyn TokenCounter,
    ) -> Self {
        let len = doc.len();
        let mut cuts: Vec<usize> = cuts.into_iter().filter(|&c| c > 0 && c < len).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut chunks = Vec::with_capacity(cuts.len() + 1);
        if len > 0 {
            let mut start = 0;
            for end in cuts.into_iter().chain(std::iter::once(len)) {
                chunks.push(Chunk {
                    start,
                    end,
                    token_count: counter.count(doc.slice(start, end)),
                    overlap_start: None,
                });
                start = end;
            }
        }
        Self {
            doc_id: doc.id.clone(),
            method: method.into(),
            counter: counter.name().to_string(),
            chunks,
        }
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn text<'d>(&self, doc: &'d Document, index: usize) -> &'d str {
        let c = &self.chunks[index];
        doc.slice(c.start, c.end)
    }

    pub fn cuts(&self) -> Vec<usize> {
        self.chunks.iter().skip(1).map(|c| c.start).collect()
    }

    /// Recompute token counts with another counter if needed.
    pub fn recounted(&self, doc: &Document, counter: &dyn TokenCounter) -> Chunking {
        if self.counter == counter.name() {
            return self.clone();
        }
        let mut out = self.clone();
        for c in &mut out.chunks {
            c.token_count = counter.count(doc.slice(c.start, c.end));
        }
        out.counter = counter.name().to_string();
        out
    }

    pub fn token_counts(&self) -> Vec<usize> {
        self.chunks.iter().map(|c| c.token_count).collect()
    }

    pub fn to_records(&self, doc: &Document) -> Vec<ChunkRecord> {
        self.chunks
            .iter()
            .enumerate()
            .map(|(index, c)| ChunkRecord {
                doc_id: self.doc_id.clone(),
                method: Some(self.method.clone()),
                index,
                start: c.start,
                end: c.end,
                token_count: c.token_count,
                overlap_hint: c.overlap_start.map(|s| [s, c.start]),
                text: doc.slice(c.start, c.end).to_string(),
            })
            .collect()
    }

    /// Reassemble a chunking from JSONL records of a single document, ordered by index.
    pub fn from_records(records: &[ChunkRecord], counter: &str) -> Option<Chunking> {
        let first = records.first()?;
        let mut sorted: Vec<&ChunkRecord> = records.iter().collect();
        sorted.sort_by_key(|r| r.index);
        Some(Chunking {
            doc_id: first.doc_id.clone(),
            method: first
                .method
                .clone()
                .unwrap_or_else(|| "imported".to_string()),
            counter: counter.to_string(),
            chunks: sorted
                .iter()
                .map(|r| Chunk {
                    start: r.start,
                    end: r.end,
                    token_count: r.token_count,
                    overlap_start: r.overlap_hint.map(|h| h[0]),
                })
                .collect(),
        })
    }
}

/// One line of chunk JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub token_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_hint: Option<[usize; 2]>,
    pub text: String,
}

/// Set of interior chunk boundaries: every chunk start except the first and
/// every chunk end except the last.
pub fn interior_boundaries(chunking: &Chunking) -> BTreeSet<usize> {
    let chunks = &chunking.chunks;
    let mut set = BTreeSet::new();
    if chunks.is_empty() {
        return set;
    }
    set.extend(chunks[1..].iter().map(|c| c.start));
    set.extend(chunks[..chunks.len() - 1].iter().map(|c| c.end));
    set
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DocIdMismatch {
        expected: String,
        found: String,
    },
    NoChunks {
        len: usize,
    },
    EmptyChunk {
        index: usize,
        at: usize,
    },
    OutOfRange {
        index: usize,
        end: usize,
        len: usize,
    },
    StartNotZero {
        at: usize,
    },
    Gap {
        at: usize,
        next_start: usize,
    },
    Overlap {
        at: usize,
        previous_end: usize,
    },
    Uncovered {
        at: usize,
        len: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DocIdMismatch { expected, found } => {
                write!(f, "chunking is for `{found}`, document is `{expected}`")
            }
            Violation::NoChunks { len } => write!(f, "no chunks for a document of length {len}"),
            Violation::EmptyChunk { index, at } => {
                write!(f, "chunk {index} is empty at offset {at}")
            }
            Violation::OutOfRange { index, end, len } => {
                write!(f, "chunk {index} ends at {end}, past document length {len}")
            }
            Violation::StartNotZero { at } => write!(f, "first chunk starts at {at}, not 0"),
            Violation::Gap { at, next_start } => {
                write!(f, "gap at offset {at} (next chunk starts at {next_start})")
            }
            Violation::Overlap { at, previous_end } => {
                write!(
                    f,
                    "overlap at offset {at} (previous chunk ends at {previous_end})"
                )
            }
            Violation::Uncovered { at, len } => {
                write!(f, "last chunk ends at {at}, document length is {len}")
            }
        }
    }
}

/// Every violated chunking invariant. An empty report means the chunking is valid.
pub fn validate_chunking(doc: &Document, chunking: &Chunking) -> Vec<Violation> {
    let mut report = Vec::new();
    let len = doc.len();
    if chunking.doc_id != doc.id {
        report.push(Violation::DocIdMismatch {
            expected: doc.id.clone(),
            found: chunking.doc_id.clone(),
        });
    }
    let chunks = &chunking.chunks;
    if chunks.is_empty() {
        if len > 0 {
            report.push(Violation::NoChunks { len });
        }
        return report;
    }
    if chunks[0].start != 0 {
        report.push(Violation::StartNotZero {
            at: chunks[0].start,
        });
    }
    for (index, c) in chunks.iter().enumerate() {
        if c.start >= c.end {
            report.push(Violation::EmptyChunk { index, at: c.start });
        }
        if c.end > len {
            report.push(Violation::OutOfRange {
                index,
                end: c.end,
                len,
            });
        }
        if index > 0 {
            let prev_end = chunks[index - 1].end;
            if c.start > prev_end {
                report.push(Violation::Gap {
                    at: prev_end,
                    next_start: c.start,
                });
            } else if c.start < prev_end {
                report.push(Violation::Overlap {
                    at: c.start,
                    previous_end: prev_end,
                });
            }
        }
    }
    let last_end = chunks[chunks.len() - 1].end;
    if last_end != len {
        report.push(Violation::Uncovered { at: last_end, len });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::WhitespaceCounter;

    fn spans(doc_id: &str, spans: &[(usize, usize)]) -> Chunking {
        Chunking {
            doc_id: doc_id.into(),
            method: "test".into(),
            counter: "whitespace".into(),
            chunks: spans
                .iter()
                .map(|&(start, end)| Chunk {
                    start,
                    end,
                    token_count: 0,
                    overlap_start: None,
                })
                .collect(),
        }
    }

    #[test]
    fn single_chunk_has_no_interior_boundaries() {
        assert!(interior_boundaries(&spans("d", &[(0, 100)])).is_empty());
    }

    #[test]
    fn interior_boundaries_are_the_cuts() {
        let b = interior_boundaries(&spans("d", &[(0, 10), (10, 25), (25, 30)]));
        assert_eq!(b.into_iter().collect::<Vec<_>>(), vec![10, 25]);
    }

    #[test]
    fn contiguous_full_cover_is_valid() {
        let doc = Document::plain("d", "x".repeat(30));
        assert!(validate_chunking(&doc, &spans("d", &[(0, 10), (10, 25), (25, 30)])).is_empty());
    }

    #[test]
    fn gap_is_reported() {
        let doc = Document::plain("d", "x".repeat(20));
        let report = validate_chunking(&doc, &spans("d", &[(0, 10), (12, 20)]));
        assert_eq!(
            report,
            vec![Violation::Gap {
                at: 10,
                next_start: 12
            }]
        );
    }

    #[test]
    fn overlap_is_reported() {
        let doc = Document::plain("d", "x".repeat(20));
        let report = validate_chunking(&doc, &spans("d", &[(0, 10), (5, 20)]));
        assert_eq!(
            report,
            vec![Violation::Overlap {
                at: 5,
                previous_end: 10
            }]
        );
    }

    #[test]
    fn coverage_violations() {
        let doc = Document::plain("d", "x".repeat(20));
        let report = validate_chunking(&doc, &spans("e", &[(2, 10), (10, 18)]));
        assert!(report.contains(&Violation::StartNotZero { at: 2 }));
        assert!(report.contains(&Violation::Uncovered { at: 18, len: 20 }));
        assert!(matches!(report[0], Violation::DocIdMismatch { .. }));
    }

    #[test]
    fn from_cuts_reconstructs_text() {
        let doc = Document::plain("d", "alpha beta\n\ngamma délta epsilon");
        let c = Chunking::from_cuts(&doc, [0, 6, 12, 6, 400], "m", &WhitespaceCounter);
        assert_eq!(c.cuts(), vec![6, 12]);
        let joined: String = (0..c.len()).map(|i| c.text(&doc, i)).collect();
        assert_eq!(joined, doc.text());
        assert_eq!(c.token_counts(), vec![1, 1, 3]);
        assert!(validate_chunking(&doc, &c).is_empty());
    }

    #[test]
    fn records_round_trip() {
        let doc = Document::plain("d", "one two three four");
        let mut c = Chunking::from_cuts(&doc, [8], "m", &WhitespaceCounter);
        c.chunks[1].overlap_start = Some(4);
        let records = c.to_records(&doc);
        let line = serde_json::to_string(&records[1]).unwrap();
        assert!(line.contains(r#""overlap_hint":[4,8]"#), "{line}");
        let back = Chunking::from_records(&records, "whitespace").unwrap();
        assert_eq!(back, c);
    }
}
