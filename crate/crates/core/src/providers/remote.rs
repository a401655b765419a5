use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EmbeddingProvider, EmbeddingVector, ProviderError};

/// JSON request/response carrier, abstracted so the protocol logic can be
/// exercised without a server.
pub trait Transport: Send + Sync {
    fn post_json(&self, path: &str, body: &Value) -> Result<Value, ProviderError>;
    fn get_json(&self, path: &str) -> Result<Value, ProviderError>;
}

/// Blocking HTTP transport rooted at `base_url`.
pub struct HttpTransport {
    base_url: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(base_url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            http: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("static HTTP client configuration"),
        }
    }

    fn finish(&self, builder: reqwest::blocking::RequestBuilder) -> Result<Value, ProviderError> {
        let builder = match &self.api_key {
            Some(key) => builder.bearer_auth(key),
            None => builder,
        };
        let resp = builder
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ProviderError::Status {
                status: status.as_u16(),
                body: resp.text().unwrap_or_default(),
            });
        }
        resp.json()
            .map_err(|e| ProviderError::Protocol(e.to_string()))
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        self.finish(
            self.http
                .post(format!("{}{path}", self.base_url))
                .json(body),
        )
    }

    fn get_json(&self, path: &str) -> Result<Value, ProviderError> {
        self.finish(self.http.get(format!("{}{path}", self.base_url)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest<'a> {
    #[serde(borrow)]
    pub texts: Vec<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
    /// Per-text flag set by servers that cut inputs to their context length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub ok: bool,
    #[serde(default)]
    pub models: BTreeMap<String, Value>,
}

pub fn health(transport: &dyn Transport) -> Result<HealthResponse, ProviderError> {
    let v = transport.get_json("/health")?;
    serde_json::from_value(v).map_err(|e| ProviderError::Protocol(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteEmbedderConfig {
    pub name: String,
    /// Expected vector dimension; learned from the first response when unset.
    pub dimension: Option<usize>,
    pub batch_size: usize,
    pub retries: usize,
    pub backoff_ms: u64,
}

impl Default for RemoteEmbedderConfig {
    fn default() -> Self {
        Self {
            name: "remote".into(),
            dimension: None,
            batch_size: 64,
            retries: 3,
            backoff_ms: 200,
        }
    }
}

/// Client for `POST /embed`. Batches are capped at `batch_size`, transient
/// failures are retried with exponential backoff and every vector is
/// re-normalised locally.
pub struct RemoteEmbedder<T> {
    transport: T,
    cfg: RemoteEmbedderConfig,
    dim: OnceLock<usize>,
    truncated: AtomicUsize,
}

impl<T: Transport> RemoteEmbedder<T> {
    pub fn new(transport: T, cfg: RemoteEmbedderConfig) -> Self {
        let dim = OnceLock::new();
        if let Some(d) = cfg.dimension {
            let _ = dim.set(d);
        }
        Self {
            transport,
            cfg,
            dim,
            truncated: AtomicUsize::new(0),
        }
    }

    /// Number of inputs the server reported as truncated so far.
    pub fn truncated_count(&self) -> usize {
        self.truncated.load(Ordering::Relaxed)
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn request(&self, texts: &[&str]) -> Result<EmbedResponse, ProviderError> {
        let body = serde_json::to_value(EmbedRequest {
            texts: texts.to_vec(),
        })
        .map_err(|e| ProviderError::Protocol(e.to_string()))?;
        let mut attempt = 0;
        loop {
            match self.transport.post_json("/embed", &body) {
                Ok(v) => {
                    return serde_json::from_value(v)
                        .map_err(|e| ProviderError::Protocol(e.to_string()))
                }
                Err(e) if e.is_transient() && attempt < self.cfg.retries => {
                    std::thread::sleep(Duration::from_millis(self.cfg.backoff_ms << attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn embed_one_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let resp = self.request(texts)?;
        if resp.vectors.len() != texts.len() {
            return Err(ProviderError::CountMismatch {
                expected: texts.len(),
                got: resp.vectors.len(),
            });
        }
        let expected = *self.dim.get_or_init(|| resp.dim);
        if resp.dim != expected {
            return Err(ProviderError::DimensionMismatch {
                expected,
                got: resp.dim,
            });
        }
        if let Some(bad) = resp.vectors.iter().find(|v| v.len() != expected) {
            return Err(ProviderError::DimensionMismatch {
                expected,
                got: bad.len(),
            });
        }
        if let Some(flags) = &resp.truncated {
            let n = flags.iter().filter(|&&t| t).count();
            self.truncated.fetch_add(n, Ordering::Relaxed);
        }
        Ok(resp
            .vectors
            .into_iter()
            .map(EmbeddingVector::normalized)
            .collect())
    }
}

impl<T: Transport> EmbeddingProvider for RemoteEmbedder<T> {
    fn name(&self) -> &str {
        &self.cfg.name
    }

    fn dimension(&self) -> usize {
        self.dim.get().copied().unwrap_or(0)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.cfg.batch_size.max(1)) {
            out.extend(self.embed_one_batch(batch)?);
        }
        Ok(out)
    }
}
