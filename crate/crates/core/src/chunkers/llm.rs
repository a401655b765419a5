//! LLM-guided regex chunking.
//!
//! The model sees the head of a document and answers with a single delimiter
//! regex wrapped in `<regex>` tags; the pattern is then applied to the whole
//! document. Invalid or unusable patterns fall back to the recursive splitter.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::regex_split::{apply_regex_split, compile_split_pattern, RegexGuard};
use super::{recursive_split_merge, ChunkerConfig};
use crate::chunking::Chunking;
use crate::document::Document;
use crate::tokens::{prefix_within_budget, TokenCounter};

pub const LLM_REGEX_METHOD: &str = "llm-regex";
pub const LLM_REGEX_FALLBACK_METHOD: &str = "llm-regex:fallback-recursive";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("LLM transport error: {0}")]
    Transport(String),
    #[error("LLM endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("LLM response is not the expected JSON: {0}")]
    Protocol(String),
    #[error("no replay transcript for `{doc_id}` in {dir}")]
    MissingTranscript { doc_id: String, dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    text: String,
}

/// Chat-completion backend. `doc_id` identifies the document being chunked so
/// replaying clients can find the matching transcript.
pub trait LlmClient: Send + Sync {
    fn model(&self) -> &str;
    fn complete(&self, doc_id: &str, request: &ChatRequest) -> Result<String, LlmError>;
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    available: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(cap: usize) -> Self {
        Self {
            available: Mutex::new(cap.max(1)),
            freed: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut n = self.available.lock().unwrap();
            while *n == 0 {
                n = self.freed.wait(n).unwrap();
            }
            *n -= 1;
        }
        let out = f();
        *self.available.lock().unwrap() += 1;
        self.freed.notify_one();
        out
    }
}

/// POSTs `{model, messages, temperature}` to `<base_url>/chat` and reads `{text}`.
pub struct HttpLlmClient {
    url: String,
    model: String,
    api_key: Option<String>,
    retries: usize,
    http: reqwest::blocking::Client,
    in_flight: InFlight,
}

impl HttpLlmClient {
    /// `api_key_env` names the environment variable holding a bearer token.
    pub fn new(
        base_url: &str,
        model: &str,
        api_key_env: &str,
        max_in_flight: usize,
        timeout: Duration,
    ) -> Self {
        Self {
            url: format!("{}/chat", base_url.trim_end_matches('/')),
            model: model.to_string(),
            api_key: std::env::var(api_key_env).ok().filter(|k| !k.is_empty()),
            retries: 1,
            http: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("static HTTP client configuration"),
            in_flight: InFlight::new(max_in_flight),
        }
    }

    fn send(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut builder = self.http.post(&self.url).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LlmError::Status {
                status: status.as_u16(),
                body: resp.text().unwrap_or_default(),
            });
        }
        let body: ChatResponse = resp.json().map_err(|e| LlmError::Protocol(e.to_string()))?;
        Ok(body.text)
    }
}

impl LlmClient for HttpLlmClient {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, _doc_id: &str, request: &ChatRequest) -> Result<String, LlmError> {
        self.in_flight.run(|| {
            let mut attempt = 0;
            loop {
                match self.send(request) {
                    Err(LlmError::Transport(_))
                    | Err(LlmError::Status {
                        status: 429 | 500..=599,
                        ..
                    }) if attempt < self.retries => {
                        attempt += 1;
                        std::thread::sleep(Duration::from_millis(500));
                    }
                    other => return other,
                }
            }
        })
    }
}

/// Serves canned responses from `<dir>/<doc_id>.txt`.
pub struct ReplayLlmClient {
    dir: PathBuf,
}

impl ReplayLlmClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn transcript_path(dir: &Path, doc_id: &str) -> PathBuf {
        dir.join(format!("{doc_id}.txt"))
    }
}

impl LlmClient for ReplayLlmClient {
    fn model(&self) -> &str {
        "replay"
    }

    fn complete(&self, doc_id: &str, _request: &ChatRequest) -> Result<String, LlmError> {
        fs::read_to_string(Self::transcript_path(&self.dir, doc_id)).map_err(|_| {
            LlmError::MissingTranscript {
                doc_id: doc_id.to_string(),
                dir: self.dir.clone(),
            }
        })
    }
}

/// Forwards to another client and stores every response as a replay transcript.
pub struct RecordingLlmClient<C> {
    inner: C,
    dir: PathBuf,
}

impl<C: LlmClient> RecordingLlmClient<C> {
    pub fn new(inner: C, dir: impl Into<PathBuf>) -> Self {
        Self {
            inner,
            dir: dir.into(),
        }
    }
}

impl<C: LlmClient> LlmClient for RecordingLlmClient<C> {
    fn model(&self) -> &str {
        self.inner.model()
    }

    fn complete(&self, doc_id: &str, request: &ChatRequest) -> Result<String, LlmError> {
        let text = self.inner.complete(doc_id, request)?;
        let path = ReplayLlmClient::transcript_path(&self.dir, doc_id);
        if let Err(e) = fs::create_dir_all(&self.dir).and_then(|_| fs::write(&path, &text)) {
            tracing::warn!("could not record transcript {}: {e}", path.display());
        }
        Ok(text)
    }
}

const EXAMPLE_INPUT: &str = "# Terms of Service\n\n## Article 1. Definitions\n\nIn these terms, \"Service\" means the hosted platform and \"User\" means any person registered on it.\n\n## Article 2. Obligations of the User\n\nThe User shall keep their credentials confidential.\n\n<Table>\n| Plan | Monthly fee |\n| --- | --- |\n| Basic | 10 EUR |\n</Table>\n\n## Article 3. Termination\n\nEither party may terminate the agreement with thirty days notice.";
const EXAMPLE_OUTPUT: &str = r"\n(?=## Article \d+\.)";

const PROMPT_TEMPLATE: &str = r#"<Task>
Your task is to split a long document into self-contained and logically complete chunks to be used in a Retrieval Augmented Generation (RAG) system. Given a document text, choose the best **unique** regular-expression to be used as a *delimiter* to split it into small chunks using the Python `re` engine and the `re.split` function.
</Task>

<Output requirements>
You **must** return only the answer in this format:
    <regex>regex pattern here</regex>
</Output requirements>

<Splitting guidelines>
    - The regex pattern **must** be valid.
    - The chunks should be self-contained, logically complete and not too large.
    - Do not split paragraphs.
    - Do not split tables, marked between <Table> </Table> tags.
    - Do not split figures, marked between <Figure> </Figure> tags.
    - Do not split lists of short elements.
    - Do not split titles from the text that follows them.
    - Do not split footnotes from their parent text.
</Splitting guidelines>

<Splitting example>
    <Example of input text>
{example_input}
    </Example of input text>

    <Expected answer>
        <regex>{example_output}</regex>
    </Expected answer>
</Splitting example>

Now, please apply this method to the following text between <Input> and </Input> markers:
<Input>{document}</Input>"#;

/// The delimiter-proposal prompt for a document sample.
pub fn build_regex_prompt(sample: &str) -> String {
    PROMPT_TEMPLATE
        .replace("{example_input}", EXAMPLE_INPUT)
        .replace("{example_output}", EXAMPLE_OUTPUT)
        .replace("{document}", sample)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegexProposal {
    pub pattern: String,
    pub raw_llm_output: String,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Pattern between the first `<regex>` and the following `</regex>`, verbatim.
pub fn extract_regex(raw: &str) -> Option<&str> {
    let open = raw.find("<regex>")? + "<regex>".len();
    let close = raw[open..].find("</regex>")?;
    Some(&raw[open..open + close])
}

impl RegexProposal {
    pub fn from_llm_output(raw: String) -> Self {
        let (pattern, valid, reason) = match extract_regex(&raw) {
            None => (
                String::new(),
                false,
                Some("missing <regex> tags".to_string()),
            ),
            Some("") => (String::new(), false, Some("empty pattern".to_string())),
            Some(p) => match compile_split_pattern(p) {
                Ok(_) => (p.to_string(), true, None),
                Err(e) => (p.to_string(), false, Some(e.to_string())),
            },
        };
        Self {
            pattern,
            raw_llm_output: raw,
            valid,
            reason,
        }
    }
}

/// Ask the model for a delimiter, showing it the first `cfg.sample_budget` tokens.
pub fn propose_regex(
    llm: &dyn LlmClient,
    doc: &Document,
    cfg: &ChunkerConfig,
    counter: &dyn TokenCounter,
) -> Result<RegexProposal, LlmError> {
    let text = doc.text();
    let sample = &text[..prefix_within_budget(text, cfg.sample_budget, counter)];
    let request = ChatRequest {
        model: llm.model().to_string(),
        messages: vec![ChatMessage {
            role: "user".to_string(),
            content: build_regex_prompt(sample),
        }],
        temperature: 0.0,
    };
    let raw = llm.complete(&doc.id, &request)?;
    Ok(RegexProposal::from_llm_output(raw))
}

#[derive(Debug, Clone)]
pub struct LlmRegexOutcome {
    pub chunking: Chunking,
    pub proposal: RegexProposal,
}

/// Propose a delimiter and split on it. Invalid proposals, and patterns
/// tripping the match-count or time guard, fall back to the recursive splitter
/// and are labelled [`LLM_REGEX_FALLBACK_METHOD`]. Only client errors propagate.
pub fn llm_regex_chunk(
    doc: &Document,
    llm: &dyn LlmClient,
    cfg: &ChunkerConfig,
    counter: &dyn TokenCounter,
) -> Result<LlmRegexOutcome, LlmError> {
    let mut proposal = propose_regex(llm, doc, cfg, counter)?;
    if proposal.valid {
        let guard = RegexGuard::for_document(doc, cfg.target_size, counter);
        match apply_regex_split(doc, &proposal.pattern, &guard, counter) {
            Ok(mut chunking) => {
                chunking.method = LLM_REGEX_METHOD.to_string();
                return Ok(LlmRegexOutcome { chunking, proposal });
            }
            Err(e) => {
                tracing::warn!(doc = %doc.id, "regex proposal rejected: {e}");
                proposal.valid = false;
                proposal.reason = Some(e.to_string());
            }
        }
    }
    let mut chunking = recursive_split_merge(doc, cfg, counter);
    chunking.method = LLM_REGEX_FALLBACK_METHOD.to_string();
    Ok(LlmRegexOutcome { chunking, proposal })
}
