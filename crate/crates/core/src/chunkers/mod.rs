//! The chunker portfolio.
//!
//! Every chunker returns a contiguous [`Chunking`](crate::Chunking) whose chunk
//! texts concatenate back to the document text.

mod cascade;
pub mod llm;
mod page;
mod recursive;
mod regex_split;
mod sentence;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cascade::{separator_cascade_split, SeparatorCascade, DEFAULT_CASCADE};
pub use llm::{
    build_regex_prompt, extract_regex, llm_regex_chunk, propose_regex, ChatMessage, ChatRequest,
    HttpLlmClient, LlmClient, LlmError, LlmRegexOutcome, RecordingLlmClient, RegexProposal,
    ReplayLlmClient,
};
pub use page::chunk_by_pages;
pub use recursive::recursive_split_merge;
pub use regex_split::{
    apply_regex_split, compile_split_pattern, decapture, RegexGuard, RegexSplitError,
};
pub use sentence::chunk_by_sentences;

#[derive(Debug, Error)]
pub enum ChunkError {
    #[error("invalid chunker config: {0}")]
    Config(String),
    #[error("sentence spans required")]
    SentencesRequired,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Regex(#[from] RegexSplitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkerConfig {
    /// Target chunk size `S` in tokens.
    pub target_size: usize,
    /// Overlap hint size in tokens; must be smaller than `target_size`.
    pub overlap: usize,
    pub sentences_per_chunk: usize,
    /// Tokens of the document shown to the LLM when proposing a delimiter.
    pub sample_budget: usize,
    pub separator_cascade: SeparatorCascade,
    pub token_counter: String,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        Self {
            target_size: 1100,
            overlap: 0,
            sentences_per_chunk: 5,
            sample_budget: 8000,
            separator_cascade: SeparatorCascade::default(),
            token_counter: "o200k_base".to_string(),
        }
    }
}

impl ChunkerConfig {
    pub fn with_target_size(mut self, target_size: usize) -> Self {
        self.target_size = target_size;
        self
    }

    pub fn with_counter(mut self, name: impl Into<String>) -> Self {
        self.token_counter = name.into();
        self
    }

    pub fn validate(&self) -> Result<(), ChunkError> {
        if self.target_size == 0 {
            return Err(ChunkError::Config("target_size must be positive".into()));
        }
        if self.overlap >= self.target_size {
            return Err(ChunkError::Config(format!(
                "overlap {} must be smaller than target_size {}",
                self.overlap, self.target_size
            )));
        }
        if self.sentences_per_chunk == 0 {
            return Err(ChunkError::Config(
                "sentences_per_chunk must be at least 1".into(),
            ));
        }
        if self.separator_cascade.is_empty() {
            return Err(ChunkError::Config("separator cascade is empty".into()));
        }
        Ok(())
    }
}
