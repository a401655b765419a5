//! Token counters.

use std::sync::{Arc, OnceLock};

use thiserror::Error;
use tiktoken_rs::CoreBPE;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("unknown token counter `{0}` (expected `whitespace` or `o200k_base`)")]
    Unknown(String),
    #[error("failed to initialise BPE vocabulary: {0}")]
    Init(String),
}

/// Counts tokens in a string. Implementations must be deterministic and
/// return 0 for the empty string.
pub trait TokenCounter: Send + Sync {
    fn name(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

/// Whitespace-delimited words. Cheap and dependency-free; used for offline tests.
#[derive(Debug, Default, Clone, Copy)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

/// Byte-pair encoding with the `o200k_base` vocabulary. Special-token strings
/// in the input are counted as ordinary text.
pub struct O200kCounter {
    bpe: &'static CoreBPE,
}

impl O200kCounter {
    pub fn new() -> Result<Self, TokenizerError> {
        static BPE: OnceLock<Result<CoreBPE, String>> = OnceLock::new();
        let bpe = BPE
            .get_or_init(|| tiktoken_rs::o200k_base().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| TokenizerError::Init(e.clone()))?;
        Ok(Self { bpe })
    }
}

impl TokenCounter for O200kCounter {
    fn name(&self) -> &str {
        "o200k_base"
    }

    fn count(&self, text: &str) -> usize {
        if text.is_empty() {
            return 0;
        }
        self.bpe.encode_ordinary(text).len()
    }
}

/// Look up a registered counter by name.
pub fn token_counter(name: &str) -> Result<Arc<dyn TokenCounter>, TokenizerError> {
    match name {
        "whitespace" => Ok(Arc::new(WhitespaceCounter)),
        "o200k_base" | "bpe-o200k" | "o200k" => Ok(Arc::new(O200kCounter::new()?)),
        other => Err(TokenizerError::Unknown(other.to_string())),
    }
}

pub fn count_tokens(text: &str, counter: &dyn TokenCounter) -> usize {
    counter.count(text)
}

/// Byte length of the longest prefix of `text` (on a character boundary) whose
/// token count does not exceed `budget`.
pub fn prefix_within_budget(text: &str, budget: usize, counter: &dyn TokenCounter) -> usize {
    if counter.count(text) <= budget {
        return text.len();
    }
    let boundaries: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    // boundaries[lo] always fits (it is 0 or a known-good prefix), boundaries[hi] does not
    let (mut lo, mut hi) = (0usize, boundaries.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if counter.count(&text[..boundaries[mid]]) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    boundaries[lo]
}
