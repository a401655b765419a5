//! Run configuration. Every field has a default, so `{}` is a complete config.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use adachunk::chunkers::{
    ChunkerConfig, HttpLlmClient, LlmClient, RecordingLlmClient, ReplayLlmClient,
};
use adachunk::providers::{HttpTransport, RemoteCoref, RemoteEmbedder, RemoteEmbedderConfig};
use adachunk::{
    token_counter, EmbeddingProvider, HashEmbedder, MetricConfig, Portfolio, SizeBounds,
    TokenCounter,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    /// Defaults to `corpus_dir`.
    pub sidecar_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub token_counter: String,
    pub bounds: SizeBounds,
    pub metrics: MetricConfig,
    pub chunker: ChunkerConfig,
    pub portfolio: Portfolio,
    pub embedding: EmbeddingSettings,
    pub coref: Option<CorefSettings>,
    pub llm: LlmSettings,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_dir: PathBuf::from("corpus"),
            sidecar_dir: None,
            output_dir: PathBuf::from("out"),
            token_counter: "o200k_base".into(),
            bounds: SizeBounds::default(),
            metrics: MetricConfig::default(),
            chunker: ChunkerConfig::default(),
            portfolio: Portfolio::default(),
            embedding: EmbeddingSettings::default(),
            coref: None,
            llm: LlmSettings::default(),
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "snake_case")]
pub enum EmbeddingSettings {
    Hash {
        #[serde(default = "default_hash_dim")]
        dim: usize,
    },
    Remote {
        url: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default, flatten)]
        client: RemoteEmbedderConfig,
    },
}

fn default_hash_dim() -> usize {
    HashEmbedder::DEFAULT_DIM
}

fn default_timeout() -> u64 {
    60
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        Self::Hash {
            dim: HashEmbedder::DEFAULT_DIM,
        }
    }
}

/// Fills in entity–pronoun pairs for English documents whose sidecar has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorefSettings {
    pub url: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub url: Option<String>,
    pub model: String,
    pub api_key_env: String,
    /// Serve responses from `<replay_dir>/<doc_id>.txt` instead of calling the model.
    pub replay_dir: Option<PathBuf>,
    /// Store live responses here for later replay.
    pub record_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            url: None,
            model: "gpt-5".into(),
            api_key_env: "ADACHUNK_LLM_API_KEY".into(),
            replay_dir: None,
            record_dir: None,
            max_in_flight: 4,
            timeout_secs: 120,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub counter: Option<String>,
    pub replay_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            None => Self::default(),
            Some(path) => {
                let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
                let mut cfg: Self =
                    serde_json::from_str(&raw).map_err(|source| ConfigError::Parse {
                        path: path.to_path_buf(),
                        source,
                    })?;
                // relative paths are taken from the config file's directory
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.rebase(base);
                cfg
            }
        };
        if let Some(c) = &overrides.counter {
            cfg.token_counter = c.clone();
        }
        if let Some(d) = &overrides.replay_dir {
            cfg.llm.replay_dir = Some(d.clone());
        }
        if let Some(w) = overrides.workers {
            cfg.workers = w;
        }
        cfg.harmonise();
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.corpus_dir);
        join(&mut self.output_dir);
        if let Some(p) = self.sidecar_dir.as_mut() {
            join(p);
        }
        if let Some(p) = self.llm.replay_dir.as_mut() {
            join(p);
        }
        if let Some(p) = self.llm.record_dir.as_mut() {
            join(p);
        }
    }

    /// The top-level counter and bounds apply to chunking and scoring alike.
    fn harmonise(&mut self) {
        self.chunker.token_counter = self.token_counter.clone();
        self.metrics.token_counter = self.token_counter.clone();
        self.metrics.bounds = self.bounds;
        self.metrics.embedding_provider = match &self.embedding {
            EmbeddingSettings::Hash { .. } => "hash".into(),
            EmbeddingSettings::Remote { client, .. } => client.name.clone(),
        };
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !self.corpus_dir.is_dir() {
            return invalid(format!(
                "corpus_dir {} is not a directory",
                self.corpus_dir.display()
            ));
        }
        if let Some(d) = &self.sidecar_dir {
            if !d.is_dir() {
                return invalid(format!("sidecar_dir {} is not a directory", d.display()));
            }
        }
        if let Some(d) = &self.llm.replay_dir {
            if !d.is_dir() {
                return invalid(format!("replay_dir {} is not a directory", d.display()));
            }
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1".into());
        }
        if self.llm.max_in_flight == 0 {
            return invalid("llm.max_in_flight must be at least 1".into());
        }
        if let EmbeddingSettings::Hash { dim: 0 } = self.embedding {
            return invalid("embedding dim must be positive".into());
        }
        self.bounds.validate().map_err(ConfigError::Invalid)?;
        self.metrics
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.chunker
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        token_counter(&self.token_counter).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn sidecar_dir(&self) -> &Path {
        self.sidecar_dir.as_deref().unwrap_or(&self.corpus_dir)
    }

    pub fn counter(&self) -> Result<Arc<dyn TokenCounter>, ConfigError> {
        token_counter(&self.token_counter).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn embedder(&self) -> Box<dyn EmbeddingProvider> {
        match &self.embedding {
            EmbeddingSettings::Hash { dim } => Box::new(HashEmbedder::new(*dim)),
            EmbeddingSettings::Remote {
                url,
                api_key_env,
                timeout_secs,
                client,
            } => {
                let key = api_key_env.as_deref().and_then(|v| std::env::var(v).ok());
                let transport = HttpTransport::new(url, key, Duration::from_secs(*timeout_secs));
                Box::new(RemoteEmbedder::new(transport, client.clone()))
            }
        }
    }

    pub fn coref(&self) -> Option<RemoteCoref<HttpTransport>> {
        self.coref.as_ref().map(|c| {
            let key = c.api_key_env.as_deref().and_then(|v| std::env::var(v).ok());
            RemoteCoref::new(HttpTransport::new(
                &c.url,
                key,
                Duration::from_secs(c.timeout_secs),
            ))
        })
    }

    /// Replay wins over a live endpoint; `None` when neither is configured.
    pub fn llm(&self) -> Option<Box<dyn LlmClient>> {
        let s = &self.llm;
        if let Some(dir) = &s.replay_dir {
            return Some(Box::new(ReplayLlmClient::new(dir.clone())));
        }
        let url = s.url.as_ref()?;
        let live = HttpLlmClient::new(
            url,
            &s.model,
            &s.api_key_env,
            s.max_in_flight,
            Duration::from_secs(s.timeout_secs),
        );
        Some(match &s.record_dir {
            Some(dir) => Box::new(RecordingLlmClient::new(live, dir.clone())),
            None => Box::new(live),
        })
    }
}
