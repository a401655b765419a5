//! Adaptive chunking: run every chunker of a portfolio on a document, score
//! the results and keep the one with the highest mean.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunkers::{
    apply_regex_split, chunk_by_pages, chunk_by_sentences, llm_regex_chunk, recursive_split_merge,
    ChunkError, ChunkerConfig, LlmClient, RegexGuard, RegexProposal,
};
use crate::chunking::Chunking;
use crate::document::Document;
use crate::metrics::{score, MetricConfig, MetricReport};
use crate::postprocess::{postprocess, SizeBounds};
use crate::providers::EmbeddingProvider;
use crate::tokens::TokenCounter;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChunkerSpec {
    LlmRegex,
    Recursive {
        target_size: usize,
        #[serde(default)]
        overlap: usize,
    },
    Page,
    Sentence {
        #[serde(default)]
        sentences_per_chunk: Option<usize>,
    },
    /// A fixed delimiter pattern.
    Regex {
        pattern: String,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioEntry {
    pub name: String,
    pub chunker: ChunkerSpec,
    #[serde(default = "yes")]
    pub postprocess: bool,
}

impl PortfolioEntry {
    pub fn new(name: impl Into<String>, chunker: ChunkerSpec, postprocess: bool) -> Self {
        Self {
            name: name.into(),
            chunker,
            postprocess,
        }
    }
}

/// Ordered candidate chunkers. Earlier entries win ties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PortfolioEntry>", into = "Vec<PortfolioEntry>")]
pub struct Portfolio {
    entries: Vec<PortfolioEntry>,
}

impl Portfolio {
    pub fn new(entries: Vec<PortfolioEntry>) -> Result<Self, String> {
        if entries.is_empty() {
            return Err("portfolio is empty".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = entries.iter().find(|e| !seen.insert(e.name.as_str())) {
            return Err(format!("duplicate portfolio entry `{}`", dup.name));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PortfolioEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&PortfolioEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// LLM regex, split-then-merge at 1100 and 600 tokens, and page chunking, all
/// post-processed.
impl Default for Portfolio {
    fn default() -> Self {
        Self::new(vec![
            PortfolioEntry::new("llm-regex", ChunkerSpec::LlmRegex, true),
            PortfolioEntry::new(
                "recursive-1100",
                ChunkerSpec::Recursive {
                    target_size: 1100,
                    overlap: 0,
                },
                true,
            ),
            PortfolioEntry::new(
                "recursive-600",
                ChunkerSpec::Recursive {
                    target_size: 600,
                    overlap: 0,
                },
                true,
            ),
            PortfolioEntry::new("page", ChunkerSpec::Page, true),
        ])
        .expect("default portfolio is valid")
    }
}

impl TryFrom<Vec<PortfolioEntry>> for Portfolio {
    type Error = String;

    fn try_from(entries: Vec<PortfolioEntry>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<Portfolio> for Vec<PortfolioEntry> {
    fn from(p: Portfolio) -> Self {
        p.entries
    }
}

/// Everything a chunker needs besides the document.
#[derive(Clone, Copy)]
pub struct ChunkContext<'a> {
    pub config: &'a ChunkerConfig,
    pub bounds: &'a SizeBounds,
    pub counter: &'a dyn TokenCounter,
    pub llm: Option<&'a dyn LlmClient>,
}

#[derive(Debug, Clone)]
pub struct ChunkRun {
    pub chunking: Chunking,
    /// Present for LLM-regex runs.
    pub proposal: Option<RegexProposal>,
    /// Chunking plus post-processing time.
    pub elapsed: Duration,
}

pub fn run_chunker(
    doc: &Document,
    spec: &ChunkerSpec,
    postprocessed: bool,
    ctx: &ChunkContext<'_>,
) -> Result<ChunkRun, ChunkError> {
    let started = Instant::now();
    let mut proposal = None;
    let cfg = ctx.config;
    let chunking = match spec {
        ChunkerSpec::LlmRegex => {
            let llm = ctx
                .llm
                .ok_or_else(|| ChunkError::Config("no LLM client configured".into()))?;
            let out = llm_regex_chunk(doc, llm, cfg, ctx.counter)?;
            proposal = Some(out.proposal);
            out.chunking
        }
        ChunkerSpec::Recursive {
            target_size,
            overlap,
        } => {
            let cfg = ChunkerConfig {
                target_size: *target_size,
                overlap: *overlap,
                ..cfg.clone()
            };
            cfg.validate()?;
            recursive_split_merge(doc, &cfg, ctx.counter)
        }
        ChunkerSpec::Page => chunk_by_pages(doc, ctx.counter),
        ChunkerSpec::Sentence {
            sentences_per_chunk,
        } => {
            let n = sentences_per_chunk.unwrap_or(cfg.sentences_per_chunk);
            if n == 0 {
                return Err(ChunkError::Config(
                    "sentences_per_chunk must be at least 1".into(),
                ));
            }
            chunk_by_sentences(doc, n, ctx.counter)?
        }
        ChunkerSpec::Regex { pattern } => {
            apply_regex_split(doc, pattern, &RegexGuard::default(), ctx.counter)?
        }
    };
    let chunking = if postprocessed {
        postprocess(
            &chunking,
            doc,
            ctx.bounds,
            &cfg.separator_cascade,
            ctx.counter,
        )
    } else {
        chunking
    };
    Ok(ChunkRun {
        chunking,
        proposal,
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub doc_id: String,
    /// Portfolio entry name of the winner.
    pub selected: String,
    /// Reports keyed by portfolio entry name, in portfolio order.
    pub reports: IndexMap<String, MetricReport>,
    /// Entries that failed to chunk or score, with the error message.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub failures: IndexMap<String, String>,
    pub chunking: Chunking,
}

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("every portfolio entry failed on `{doc_id}`: {}", format_failures(.failures))]
    AllFailed {
        doc_id: String,
        failures: IndexMap<String, String>,
    },
}

fn format_failures(failures: &IndexMap<String, String>) -> String {
    failures
        .iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Run, score and pick the entry with the highest mean; ties go to the
/// earlier entry. Failing entries are recorded and skipped.
pub fn select_best(
    doc: &Document,
    portfolio: &Portfolio,
    ctx: &ChunkContext<'_>,
    metrics: &MetricConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<SelectionResult, SelectError> {
    let mut reports = IndexMap::new();
    let mut failures = IndexMap::new();
    let mut chunkings = Vec::new();
    for entry in portfolio.entries() {
        let scored = run_chunker(doc, &entry.chunker, entry.postprocess, ctx)
            .map_err(|e| e.to_string())
            .and_then(|run| {
                score(doc, &run.chunking, metrics, provider)
                    .map(|r| (r, run.chunking))
                    .map_err(|e| e.to_string())
            });
        match scored {
            Ok((report, chunking)) => {
                reports.insert(entry.name.clone(), report);
                chunkings.push(chunking);
            }
            Err(e) => {
                tracing::warn!(doc = %doc.id, method = %entry.name, "{e}");
                failures.insert(entry.name.clone(), e);
            }
        }
    }
    match argmax_first(reports.values().map(|r| r.mean)) {
        Some(i) => Ok(SelectionResult {
            doc_id: doc.id.clone(),
            selected: reports
                .get_index(i)
                .map(|(k, _)| k.clone())
                .unwrap_or_default(),
            reports,
            failures,
            chunking: chunkings.swap_remove(i),
        }),
        None => Err(SelectError::AllFailed {
            doc_id: doc.id.clone(),
            failures,
        }),
    }
}

/// Index of the largest value; the first one wins ties. NaN never wins.
pub fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if v > b || b.is_nan() => best = Some((i, v)),
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionShare {
    pub method: String,
    pub documents: usize,
    /// Share of documents, rounded half up to an integer percentage.
    pub percent: u32,
}

/// How often each method was selected, most frequent first (ties by name).
pub fn selection_stats(results: &[SelectionResult]) -> Vec<SelectionShare> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in results {
        *counts.entry(r.selected.as_str()).or_default() += 1;
    }
    let total = results.len();
    let mut shares: Vec<SelectionShare> = counts
        .into_iter()
        .map(|(method, documents)| SelectionShare {
            method: method.to_string(),
            documents,
            percent: ((documents * 200 + total) / (2 * total)) as u32,
        })
        .collect();
    shares.sort_by(|a, b| {
        b.documents
            .cmp(&a.documents)
            .then_with(|| a.method.cmp(&b.method))
    });
    shares
}
