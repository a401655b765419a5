//! Intrinsic chunk-quality metrics.
//!
//! | metric | measures |
//! |---|---|
//! | RC  | share of entity–pronoun pairs kept in one chunk |
//! | BI  | share of structural blocks not cut (with a tolerance of `τ` characters) |
//! | ICC | similarity of a chunk's blocks to the chunk itself |
//! | DCC | similarity of chunks to sliding windows of their neighbours |
//! | SC  | share of chunks whose size lies within the configured bounds |
//!
//! Every value lies in `[0, 1]`. A metric whose precondition does not hold on
//! a document is [`MetricValue::NotApplicable`] and is left out of the mean.

mod bi;
mod coherence;
mod cohesion;
mod rc;
mod size;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::chunking::Chunking;
use crate::document::Document;
use crate::postprocess::SizeBounds;
use crate::providers::{EmbeddingCache, EmbeddingProvider, ProviderError};
use crate::tokens::{token_counter, TokenizerError};

pub use bi::{block_integrity, BiOutcome};
pub use coherence::{
    build_windows, document_contextual_coherence, window_texts, DccOutcome, Window,
};
pub use cohesion::{chunk_block_texts, intrachunk_cohesion, IccOutcome};
pub use rc::{references_completeness, RcOutcome};
pub use size::{size_compliance, ScOutcome};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty chunking")]
    EmptyChunking,
    #[error("invalid metric configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rc,
    Icc,
    Dcc,
    Bi,
    Sc,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Rc, Metric::Icc, Metric::Dcc, Metric::Bi, Metric::Sc];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Rc => "RC",
            Metric::Icc => "ICC",
            Metric::Dcc => "DCC",
            Metric::Bi => "BI",
            Metric::Sc => "SC",
        }
    }

    fn needs_embeddings(self) -> bool {
        matches!(self, Metric::Icc | Metric::Dcc)
    }
}

/// A metric value, or the marker for a metric that does not apply. Serialised
/// as a number or `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Value(f64),
    NotApplicable,
}

impl MetricValue {
    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(v),
            MetricValue::NotApplicable => None,
        }
    }

    pub fn is_applicable(self) -> bool {
        matches!(self, MetricValue::Value(_))
    }
}

impl From<Option<f64>> for MetricValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(MetricValue::NotApplicable, MetricValue::Value)
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Option::<f64>::deserialize(d).map(Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub bounds: SizeBounds,
    /// BI tolerance in characters.
    pub bi_tolerance: usize,
    /// DCC window budget in tokens.
    pub dcc_budget: usize,
    pub window_step: usize,
    pub token_counter: String,
    pub embedding_provider: String,
    /// Metrics switched off for the whole run.
    pub disabled: Vec<Metric>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            bounds: SizeBounds::default(),
            bi_tolerance: 5,
            dcc_budget: 3000,
            window_step: 1,
            token_counter: "o200k_base".into(),
            embedding_provider: "hash".into(),
            disabled: Vec::new(),
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        self.bounds.validate().map_err(MetricError::Config)?;
        if self.dcc_budget == 0 {
            return Err(MetricError::Config("dcc_budget must be positive".into()));
        }
        if self.window_step == 0 {
            return Err(MetricError::Config("window_step must be at least 1".into()));
        }
        Ok(())
    }

    pub fn is_enabled(&self, metric: Metric) -> bool {
        !self.disabled.contains(&metric)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Entity–pronoun pairs (N) and how many were cut.
    pub pairs: usize,
    pub severed_pairs: usize,
    pub blocks: usize,
    pub broken_blocks: usize,
    /// Chunks holding at least two non-empty blocks.
    pub cohesive_chunks: usize,
    pub windows: usize,
    pub chunks: usize,
    pub compliant_chunks: usize,
    /// Similarities skipped because one side embedded to the zero vector.
    pub zero_vector_pairs: usize,
    pub not_applicable: Vec<Metric>,
    pub disabled: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub doc_id: String,
    pub method: String,
    pub rc: MetricValue,
    pub icc: MetricValue,
    pub dcc: MetricValue,
    pub bi: MetricValue,
    pub sc: MetricValue,
    /// Mean of the applicable metrics (0 when none applies).
    pub mean: f64,
    pub diagnostics: Diagnostics,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> MetricValue {
        match metric {
            Metric::Rc => self.rc,
            Metric::Icc => self.icc,
            Metric::Dcc => self.dcc,
            Metric::Bi => self.bi,
            Metric::Sc => self.sc,
        }
    }

    fn set(&mut self, metric: Metric, value: MetricValue) {
        match metric {
            Metric::Rc => self.rc = value,
            Metric::Icc => self.icc = value,
            Metric::Dcc => self.dcc = value,
            Metric::Bi => self.bi = value,
            Metric::Sc => self.sc = value,
        }
    }
}

/// Arithmetic mean of the applicable values, 0 if there are none.
pub fn mean_of(values: &[MetricValue]) -> f64 {
    let applicable: Vec<f64> = values.iter().filter_map(|v| v.value()).collect();
    if applicable.is_empty() {
        0.0
    } else {
        applicable.iter().sum::<f64>() / applicable.len() as f64
    }
}

/// Score one chunking of `doc` on every enabled metric.
///
/// Token counts are recomputed with `cfg.token_counter` when the chunking was
/// produced with another counter. All texts needing an embedding (blocks,
/// chunks, windows) go to the provider in a single batch. RC applies only to
/// English documents whose sidecar lists entity–pronoun pairs.
pub fn score(
    doc: &Document,
    chunking: &Chunking,
    cfg: &MetricConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<MetricReport, MetricError> {
    cfg.validate()?;
    if chunking.is_empty() {
        return Err(MetricError::EmptyChunking);
    }
    let counter = token_counter(&cfg.token_counter)?;
    let chunking = chunking.recounted(doc, counter.as_ref());

    let mut report = MetricReport {
        doc_id: doc.id.clone(),
        method: chunking.method.clone(),
        rc: MetricValue::NotApplicable,
        icc: MetricValue::NotApplicable,
        dcc: MetricValue::NotApplicable,
        bi: MetricValue::NotApplicable,
        sc: MetricValue::NotApplicable,
        mean: 0.0,
        diagnostics: Diagnostics {
            chunks: chunking.len(),
            ..Default::default()
        },
    };
    let diag = &mut report.diagnostics;

    let sc = size_compliance(&chunking, &cfg.bounds)?;
    diag.compliant_chunks = sc.compliant;

    let rc = if doc.is_english() && !doc.missing.contains(&"coref_pairs") {
        let out = references_completeness(&chunking, &doc.coref_pairs);
        diag.pairs = out.pairs;
        diag.severed_pairs = out.severed;
        out.value
    } else {
        MetricValue::NotApplicable
    };

    let bi = block_integrity(&chunking, &doc.blocks, cfg.bi_tolerance);
    diag.blocks = bi.blocks;
    diag.broken_blocks = bi.broken;

    let wants_embeddings = Metric::ALL
        .iter()
        .any(|&m| m.needs_embeddings() && cfg.is_enabled(m));
    let (icc, dcc) = if wants_embeddings {
        let blocks = chunk_block_texts(&chunking, doc);
        let windows = build_windows(&chunking.token_counts(), cfg.dcc_budget, cfg.window_step);
        let wtexts = window_texts(&chunking, doc, &windows);
        let chunk_texts = (0..chunking.len()).map(|i| chunking.text(doc, i));
        let mut texts: Vec<&str> = Vec::new();
        if cfg.is_enabled(Metric::Icc) {
            texts.extend(blocks.iter().flatten().copied());
        }
        texts.extend(chunk_texts);
        if cfg.is_enabled(Metric::Dcc) {
            texts.extend(wtexts.iter().copied());
        }
        let cache = EmbeddingCache::build(provider, texts)?;

        let icc = if cfg.is_enabled(Metric::Icc) {
            let out = cohesion::icc_from_cache(&chunking, doc, &blocks, &cache);
            diag.cohesive_chunks = out.cohesive_chunks;
            diag.zero_vector_pairs += out.zero_vector_pairs;
            out.value
        } else {
            MetricValue::NotApplicable
        };
        let dcc = if cfg.is_enabled(Metric::Dcc) {
            let out = coherence::dcc_from_cache(&chunking, doc, &windows, &wtexts, &cache);
            diag.windows = out.windows;
            diag.zero_vector_pairs += out.zero_vector_pairs;
            out.value
        } else {
            MetricValue::NotApplicable
        };
        (icc, dcc)
    } else {
        (MetricValue::NotApplicable, MetricValue::NotApplicable)
    };

    for (metric, value) in [
        (Metric::Rc, rc),
        (Metric::Icc, icc),
        (Metric::Dcc, dcc),
        (Metric::Bi, bi.value),
        (Metric::Sc, sc.value),
    ] {
        if !cfg.is_enabled(metric) {
            report.diagnostics.disabled.push(metric);
            continue;
        }
        if !value.is_applicable() {
            report.diagnostics.not_applicable.push(metric);
        }
        report.set(metric, value);
    }
    report.mean = mean_of(&Metric::ALL.map(|m| report.get(m)));
    Ok(report)
}
