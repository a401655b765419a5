//! # adachunk
//!
//! Document-aware chunking for retrieval pipelines, with intrinsic chunk-quality
//! metrics and per-document selection of the best chunker.
//!
//! The crate is organised around a few pieces:
//!
//! - [`document`]: the parsed Markdown [`Document`] with its structural sidecar
//!   (block spans, page breaks, sentence spans, entity–pronoun pairs).
//! - [`chunking`]: contiguous, exhaustive [`Chunking`]s and their validation.
//! - [`tokens`]: token counters (whitespace and `o200k_base` BPE).
//! - [`chunkers`]: page, sentence, split-then-merge recursive and LLM-regex chunkers.
//! - [`postprocess`]: oversized re-splitting followed by tiny-chunk merging.
//! - [`providers`]: embedding / coreference providers, including an in-process
//!   hash embedder for offline scoring.
//! - [`metrics`]: References Completeness, Block Integrity, Intrachunk Cohesion,
//!   Document Contextual Coherence and Size Compliance.
//! - [`selector`]: the adaptive policy that scores a portfolio of chunkers per
//!   document and keeps the argmax.
//! - [`stats`]: corpus-level size statistics and metric aggregates.
//!
//! All offsets are Unicode scalar value (character) offsets into the document text.

pub mod chunkers;
pub mod chunking;
pub mod document;
pub mod metrics;
pub mod postprocess;
pub mod providers;
pub mod selector;
pub mod stats;
pub mod tokens;

pub use chunking::{interior_boundaries, validate_chunking, Chunk, Chunking, Violation};
pub use document::{
    load_document, BlockKind, BlockSpan, Document, DocumentError, EntityPronounPair,
};
pub use metrics::{MetricConfig, MetricReport, MetricValue};
pub use postprocess::{postprocess, MergePolicy, SizeBounds};
pub use providers::{EmbeddingProvider, EmbeddingVector, HashEmbedder};
pub use selector::{select_best, selection_stats, Portfolio, SelectionResult};
pub use tokens::{count_tokens, token_counter, TokenCounter};
