//! Parsed documents and their structural annotations.
//!
//! A [`Document`] is the Markdown text produced by an upstream parser together
//! with a JSON sidecar carrying block spans, page breaks, sentence spans and
//! entity–pronoun pairs. Every span is expressed in character offsets.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Literal marker the Markdown generator emits between pages.
pub const PAGE_BREAK_MARKER: &str = "<!-- PageBreak -->";

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is not valid UTF-8")]
    NotUtf8(PathBuf),
    #[error("malformed sidecar JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{what} [{start}, {end}) span exceeds document length {len}")]
    OutOfRange {
        what: &'static str,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("{what} [{start}, {end}) is empty or inverted")]
    EmptySpan {
        what: &'static str,
        start: usize,
        end: usize,
    },
    #[error("blocks do not tile the document at [{start}, {end}): {detail}")]
    BlockTiling {
        start: usize,
        end: usize,
        detail: String,
    },
    #[error("sentence [{start}, {end}) overlaps or precedes the previous sentence")]
    SentenceOrder { start: usize, end: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Paragraph,
    Table,
    Figure,
    Title,
    List,
    HeaderFooter,
    #[serde(other)]
    Other,
}

/// A parser-provided structural unit. Blocks tile the document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpan {
    pub start: usize,
    pub end: usize,
    pub kind: BlockKind,
}

/// `entity_start` is the start of the antecedent, `pronoun_end` the end of the
/// pronoun referring back to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityPronounPair {
    pub entity_start: usize,
    pub pronoun_end: usize,
    #[serde(default)]
    pub entity_text: String,
    #[serde(default)]
    pub pronoun_text: String,
}

impl EntityPronounPair {
    pub fn new(entity_start: usize, pronoun_end: usize) -> Self {
        Self {
            entity_start,
            pronoun_end,
            entity_text: String::new(),
            pronoun_text: String::new(),
        }
    }
}

/// On-disk sidecar. `page_breaks`, `sentences`, `coref_pairs` and `language`
/// are optional; their absence is recorded on the loaded document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default)]
    pub blocks: Vec<(usize, usize, BlockKind)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_breaks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coref_pairs: Option<Vec<EntityPronounPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PageBreakSource {
    Sidecar,
    Marker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    text: String,
    /// Byte offset of every character, plus `text.len()` as the final entry.
    char_starts: Vec<usize>,
    pub blocks: Vec<BlockSpan>,
    pub page_breaks: Vec<usize>,
    pub page_break_source: PageBreakSource,
    pub sentences: Vec<(usize, usize)>,
    pub coref_pairs: Vec<EntityPronounPair>,
    pub language: String,
    /// Optional sidecar fields that were absent and defaulted.
    pub missing: Vec<&'static str>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        sidecar: Sidecar,
    ) -> Result<Self, DocumentError> {
        let text = text.into();
        let mut char_starts: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        char_starts.push(text.len());
        let len = char_starts.len() - 1;

        let blocks = check_blocks(&sidecar.blocks, len)?;

        let mut missing = Vec::new();
        let (page_breaks, page_break_source) = match sidecar.page_breaks {
            Some(mut breaks) => {
                for &b in &breaks {
                    if b >= len.max(1) {
                        return Err(DocumentError::OutOfRange {
                            what: "page break",
                            start: b,
                            end: b,
                            len,
                        });
                    }
                }
                breaks.sort_unstable();
                breaks.dedup();
                (breaks, PageBreakSource::Sidecar)
            }
            None => {
                let breaks = text
                    .match_indices(PAGE_BREAK_MARKER)
                    .map(|(byte, _)| byte_to_char(&char_starts, byte))
                    .collect();
                (breaks, PageBreakSource::Marker)
            }
        };

        let sentences = match sidecar.sentences {
            Some(s) => {
                check_sentences(&s, len)?;
                s
            }
            None => {
                missing.push("sentences");
                Vec::new()
            }
        };

        let coref_pairs = match sidecar.coref_pairs {
            Some(pairs) => {
                for p in &pairs {
                    if p.pronoun_end > len {
                        return Err(DocumentError::OutOfRange {
                            what: "coref pair",
                            start: p.entity_start,
                            end: p.pronoun_end,
                            len,
                        });
                    }
                    if p.entity_start >= p.pronoun_end {
                        return Err(DocumentError::EmptySpan {
                            what: "coref pair",
                            start: p.entity_start,
                            end: p.pronoun_end,
                        });
                    }
                }
                pairs
            }
            None => {
                missing.push("coref_pairs");
                Vec::new()
            }
        };

        let language = sidecar.language.unwrap_or_else(|| {
            missing.push("language");
            "und".to_string()
        });

        Ok(Self {
            id: id.into(),
            text,
            char_starts,
            blocks,
            page_breaks,
            page_break_source,
            sentences,
            coref_pairs,
            language,
            missing,
        })
    }

    /// Single-block document with no optional annotations. Handy for tests and
    /// for chunking plain text.
    pub fn plain(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let len = text.chars().count();
        let blocks = if len == 0 {
            Vec::new()
        } else {
            vec![(0, len, BlockKind::Paragraph)]
        };
        Self::new(
            id,
            text,
            Sidecar {
                blocks,
                ..Default::default()
            },
        )
        .expect("a single full-length block always tiles")
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Document length in characters.
    pub fn len(&self) -> usize {
        self.char_starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Text of the character span `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> &str {
        &self.text[self.char_starts[start]..self.char_starts[end]]
    }

    pub fn byte_offset(&self, char_offset: usize) -> usize {
        self.char_starts[char_offset]
    }

    /// Character offset of a byte offset that falls on a character boundary.
    pub fn char_offset(&self, byte_offset: usize) -> usize {
        byte_to_char(&self.char_starts, byte_offset)
    }

    pub fn is_english(&self) -> bool {
        let lang = self.language.to_ascii_lowercase();
        lang == "en" || lang.starts_with("en-")
    }

    pub fn to_sidecar(&self) -> Sidecar {
        Sidecar {
            blocks: self
                .blocks
                .iter()
                .map(|b| (b.start, b.end, b.kind))
                .collect(),
            page_breaks: Some(self.page_breaks.clone()),
            sentences: (!self.missing.contains(&"sentences")).then(|| self.sentences.clone()),
            coref_pairs: (!self.missing.contains(&"coref_pairs")).then(|| self.coref_pairs.clone()),
            language: (!self.missing.contains(&"language")).then(|| self.language.clone()),
        }
    }
}

fn byte_to_char(char_starts: &[usize], byte: usize) -> usize {
    match char_starts.binary_search(&byte) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    }
}

fn check_blocks(
    raw: &[(usize, usize, BlockKind)],
    len: usize,
) -> Result<Vec<BlockSpan>, DocumentError> {
    let mut expected_start = 0;
    let mut blocks = Vec::with_capacity(raw.len());
    for &(start, end, kind) in raw {
        if end > len {
            return Err(DocumentError::OutOfRange {
                what: "block",
                start,
                end,
                len,
            });
        }
        if start >= end {
            return Err(DocumentError::EmptySpan {
                what: "block",
                start,
                end,
            });
        }
        if start != expected_start {
            return Err(DocumentError::BlockTiling {
                start,
                end,
                detail: format!("expected block to start at {expected_start}"),
            });
        }
        expected_start = end;
        blocks.push(BlockSpan { start, end, kind });
    }
    if expected_start != len {
        let (start, end) = raw.last().map(|b| (b.0, b.1)).unwrap_or((0, 0));
        return Err(DocumentError::BlockTiling {
            start,
            end,
            detail: format!("last block ends at {expected_start}, document length is {len}"),
        });
    }
    Ok(blocks)
}

fn check_sentences(sentences: &[(usize, usize)], len: usize) -> Result<(), DocumentError> {
    let mut prev_end = 0;
    for &(start, end) in sentences {
        if end > len {
            return Err(DocumentError::OutOfRange {
                what: "sentence",
                start,
                end,
                len,
            });
        }
        if start >= end {
            return Err(DocumentError::EmptySpan {
                what: "sentence",
                start,
                end,
            });
        }
        if start < prev_end {
            return Err(DocumentError::SentenceOrder { start, end });
        }
        prev_end = end;
    }
    Ok(())
}

/// Load a Markdown file and its sidecar. The document id is the Markdown file stem.
pub fn load_document(markdown_path: &Path, sidecar_path: &Path) -> Result<Document, DocumentError> {
    let bytes = fs::read(markdown_path).map_err(|source| DocumentError::Io {
        path: markdown_path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes)
        .map_err(|_| DocumentError::NotUtf8(markdown_path.to_path_buf()))?;
    let raw = fs::read_to_string(sidecar_path).map_err(|source| DocumentError::Io {
        path: sidecar_path.to_path_buf(),
        source,
    })?;
    let sidecar: Sidecar = serde_json::from_str(&raw)?;
    let id = markdown_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Document::new(id, text, sidecar)
}
