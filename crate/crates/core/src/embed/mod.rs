//! Dense embeddings: the unit-norm contract, a remote encoder client and a
//! deterministic offline encoder.
//!
//! Every vector that leaves this module has unit L2 norm, so inner products
//! downstream are cosine similarities.

mod http;
mod mock;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub use http::HttpEncoder;
pub use mock::{mock_embed, MockEncoder, MIN_MOCK_DIM};

use crate::error::{Error, Result};
use crate::tokens::{CharRatioEstimator, TokenEstimator};

pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    Doc,
    Chunk,
    Query,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    /// Report id for doc vectors, chunk id for chunk vectors.
    pub id: String,
    pub kind: VectorKind,
    pub values: Vec<f32>,
    pub model_id: String,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
    }
}

/// Inner product accumulated in f64.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

pub(crate) fn to_unit_f32(v: &[f64]) -> Result<Vec<f32>> {
    Ok(l2_normalize(v)?.into_iter().map(|x| x as f32).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub endpoint_url: String,
    pub model_id: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub max_input_tokens: usize,
    pub batch_size: usize,
    pub timeout_secs: u64,
    pub instruction_prefix: String,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            endpoint_url: String::new(),
            model_id: "e5-large-v2".into(),
            api_key: None,
            max_input_tokens: 512,
            batch_size: 32,
            timeout_secs: 30,
            instruction_prefix: String::new(),
        }
    }
}

impl EncoderConfig {
    /// Defaults overridden by `EMBED_URL`, `EMBED_KEY` and `EMBED_MODEL`.
    pub fn from_env() -> Self {
        let mut cfg = EncoderConfig::default();
        cfg.apply_env();
        cfg
    }

    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var("EMBED_URL") {
            self.endpoint_url = url;
        }
        if let Ok(key) = std::env::var("EMBED_KEY") {
            self.api_key = Some(key);
        }
        if let Ok(model) = std::env::var("EMBED_MODEL") {
            self.model_id = model;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_input_tokens < 1 || self.batch_size < 1 {
            return Err(Error::InvalidConfig("encoder needs max_input_tokens >= 1 and batch_size >= 1".into()));
        }
        Ok(())
    }
}

/// Source of raw (not necessarily normalized) embeddings.
pub trait Encoder: Debug + Send + Sync {
    fn model_id(&self) -> &str;

    /// One vector per input, in input order.
    fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Embeds `texts` in batches: truncates each (with prefix) to the token cap,
/// checks the dimension against `expected_dim` (or the first vector) and
/// re-normalizes every vector.
pub fn embed_texts(
    encoder: &dyn Encoder,
    cfg: &EncoderConfig,
    texts: &[String],
    expected_dim: Option<usize>,
) -> Result<Vec<Vec<f32>>> {
    cfg.validate()?;
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(Error::EmptyInput(format!("text #{i} is empty")));
    }
    let estimator = CharRatioEstimator::default();
    let prepared: Vec<String> = texts.iter().map(|t| prepare_input(&estimator, cfg, t)).collect();

    let mut dim = expected_dim;
    let mut out = Vec::with_capacity(texts.len());
    for batch in prepared.chunks(cfg.batch_size) {
        let raw = encoder.encode_batch(batch)?;
        if raw.len() != batch.len() {
            return Err(Error::ProviderUnavailable(format!(
                "encoder returned {} vectors for {} inputs",
                raw.len(),
                batch.len()
            )));
        }
        for v in raw {
            let want = *dim.get_or_insert(v.len());
            if v.len() != want {
                return Err(Error::DimensionMismatch { expected: want, actual: v.len() });
            }
            out.push(to_unit_f32(&v)?);
        }
    }
    Ok(out)
}

fn prepare_input(estimator: &dyn TokenEstimator, cfg: &EncoderConfig, text: &str) -> String {
    let full = format!("{}{}", cfg.instruction_prefix, text);
    crate::tokens::truncate_head(estimator, &full, cfg.max_input_tokens).to_string()
}

/// Embeds `(id, text)` pairs into tagged vectors.
pub fn embed_items(
    encoder: &dyn Encoder,
    cfg: &EncoderConfig,
    kind: VectorKind,
    items: &[(String, String)],
    expected_dim: Option<usize>,
) -> Result<Vec<EmbeddingVector>> {
    let texts: Vec<String> = items.iter().map(|(_, t)| t.clone()).collect();
    let vectors = embed_texts(encoder, cfg, &texts, expected_dim)?;
    Ok(items
        .iter()
        .zip(vectors)
        .map(|((id, _), values)| EmbeddingVector { id: id.clone(), kind, values, model_id: encoder.model_id().to_string() })
        .collect())
}

/// Embeds a single query through the same path as corpus text.
pub fn embed_query(encoder: &dyn Encoder, cfg: &EncoderConfig, query: &str, expected_dim: Option<usize>) -> Result<Vec<f32>> {
    let mut v = embed_texts(encoder, cfg, &[query.to_string()], expected_dim)?;
    Ok(v.remove(0))
}
