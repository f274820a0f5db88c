use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::retry::{with_backoff, MAX_ATTEMPTS};

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

/// Client for an OpenAI-style `/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct HttpEncoder {
    client: reqwest::blocking::Client,
    url: String,
    model_id: String,
    api_key: Option<String>,
    backoff: Duration,
}

impl HttpEncoder {
    pub fn new(cfg: &EncoderConfig) -> Result<Self> {
        if cfg.endpoint_url.is_empty() {
            return Err(Error::InvalidConfig("encoder endpoint URL is not set (EMBED_URL)".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("HTTP client: {e}")))?;
        Ok(HttpEncoder {
            client,
            url: cfg.endpoint_url.clone(),
            model_id: cfg.model_id.clone(),
            api_key: cfg.api_key.clone(),
            backoff: Duration::from_millis(200),
        })
    }

    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    fn call(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut req = self.client.post(&self.url).json(&EmbeddingRequest { model: &self.model_id, input: texts });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Error::ProviderUnavailable(format!("embedding request: {e}")))?;
        let status = resp.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(Error::ProviderUnavailable(format!("embedding endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(Error::InvalidInput(format!("embedding endpoint rejected the request with {status}")));
        }
        let body: EmbeddingResponse = resp
            .json()
            .map_err(|e| Error::ProviderUnavailable(format!("malformed embedding response: {e}")))?;
        let mut data = body.data;
        data.sort_by_key(|d| d.index);
        if data.len() != texts.len() || data.iter().enumerate().any(|(i, d)| d.index != i) {
            return Err(Error::ProviderUnavailable(format!(
                "embedding response has {} entries for {} inputs",
                data.len(),
                texts.len()
            )));
        }
        Ok(data.into_iter().map(|d| d.embedding).collect())
    }
}

impl Encoder for HttpEncoder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        with_backoff(MAX_ATTEMPTS, self.backoff, || self.call(texts))
    }
}
