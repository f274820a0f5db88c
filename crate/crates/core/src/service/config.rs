use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embed::{Encoder, EncoderConfig, HttpEncoder, MockEncoder, MIN_MOCK_DIM};
use crate::error::{Error, Result};
use crate::rag::{HttpLlm, LlmClient, LlmConfig, RagConfig};
use crate::retrieval::{Corpus, Engine, FusionWeights, IndexBuildConfig, IndexSet, DEFAULT_K_BACKEND};

/// Which encoder serves queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderBackend {
    /// OpenAI-style embeddings endpoint from `[encoder]`.
    Http,
    /// Deterministic hashed trigram encoder; for tests and offline demos.
    Mock { dim: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortDefaults {
    pub concurrency: usize,
    /// Jobs allowed to run at once; later submissions wait in `queued`.
    pub max_running_jobs: usize,
}

impl Default for CohortDefaults {
    fn default() -> Self {
        CohortDefaults { concurrency: 4, max_running_jobs: 1 }
    }
}

/// Service and CLI configuration, read from TOML with env overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub corpus_dir: PathBuf,
    pub index_dir: PathBuf,
    /// Where finished cohort jobs write `decisions.jsonl` / `stats.json`.
    pub jobs_dir: Option<PathBuf>,
    pub bind: String,
    #[serde(skip_serializing)]
    pub api_token: Option<String>,
    pub k_backend: usize,
    pub weights: FusionWeights,
    pub encoder_backend: EncoderBackend,
    pub encoder: EncoderConfig,
    pub llm: LlmConfig,
    pub rag: RagConfig,
    pub cohort: CohortDefaults,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            corpus_dir: PathBuf::from("corpus"),
            index_dir: PathBuf::from("index"),
            jobs_dir: None,
            bind: "127.0.0.1:8080".into(),
            api_token: None,
            k_backend: DEFAULT_K_BACKEND,
            weights: FusionWeights::default(),
            encoder_backend: EncoderBackend::Http,
            encoder: EncoderConfig::default(),
            llm: LlmConfig::default(),
            rag: RagConfig::default(),
            cohort: CohortDefaults::default(),
        }
    }
}

impl EngineConfig {
    /// Reads `path` (TOML), then applies environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.apply_env();
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    /// `EMBED_URL`/`EMBED_KEY`/`EMBED_MODEL`, `LLM_URL`/`LLM_KEY`/`LLM_MODEL`
    /// and `PATHARCHIVE_TOKEN`.
    pub fn apply_env(&mut self) {
        self.encoder.apply_env();
        self.llm.apply_env();
        if let Ok(token) = std::env::var("PATHARCHIVE_TOKEN") {
            self.api_token = Some(token);
        }
    }

    pub fn context_budget(&self) -> usize {
        self.rag.context_budget
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.rag.validate()?;
        self.encoder.validate()?;
        if self.k_backend < 1 {
            return Err(Error::InvalidConfig("k_backend must be at least 1".into()));
        }
        if self.cohort.concurrency < 1 || self.cohort.max_running_jobs < 1 {
            return Err(Error::InvalidConfig("cohort concurrency and max_running_jobs must be at least 1".into()));
        }
        if let EncoderBackend::Mock { dim, .. } = self.encoder_backend {
            if dim < MIN_MOCK_DIM {
                return Err(Error::InvalidConfig(format!("mock encoder dim must be at least {MIN_MOCK_DIM}")));
            }
        }
        Ok(())
    }

    /// `validate` plus the startup check that corpus and index directories exist.
    pub fn validate_paths(&self) -> Result<()> {
        self.validate()?;
        for (what, dir) in [("corpus_dir", &self.corpus_dir), ("index_dir", &self.index_dir)] {
            if !dir.is_dir() {
                return Err(Error::InvalidConfig(format!("{what} {} does not exist", dir.display())));
            }
        }
        Ok(())
    }

    pub fn encoder(&self) -> Result<Arc<dyn Encoder>> {
        Ok(match self.encoder_backend {
            EncoderBackend::Http => Arc::new(HttpEncoder::new(&self.encoder)?),
            EncoderBackend::Mock { dim, seed } => Arc::new(MockEncoder::new(dim, seed)),
        })
    }

    pub fn index_build_config(&self) -> IndexBuildConfig {
        IndexBuildConfig { encoder: self.encoder.clone(), ..IndexBuildConfig::default() }
    }

    /// Corpus from `corpus_dir` with the persisted indices from `index_dir`.
    pub fn open_engine(&self) -> Result<Engine> {
        let corpus = Corpus::load(&self.corpus_dir)?;
        let indices = IndexSet::load(&self.index_dir)?;
        Engine::new(Arc::new(corpus), Arc::new(indices), self.encoder()?, self.encoder.clone())
    }

    /// HTTP client for the configured endpoint, or `None` when no URL is set.
    pub fn llm_client(&self) -> Result<Option<Arc<dyn LlmClient>>> {
        if self.llm.endpoint_url.is_empty() {
            return Ok(None);
        }
        Ok(Some(Arc::new(HttpLlm::new(&self.llm)?)))
    }

    /// Effective configuration as TOML; secrets are never printed.
    pub fn show(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_show() {
        let cfg = EngineConfig::default();
        let text = cfg.show().unwrap();
        assert!(text.contains("context_budget = 8192"));
        assert!(text.contains("k_backend = 200"));
        assert!(text.contains("alpha_doc = 0.5"));
        assert_eq!(EngineConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = EngineConfig::from_toml(
            "corpus_dir = \"/data/c\"\n[encoder_backend]\nkind = \"mock\"\ndim = 64\nseed = 1\n[rag]\ncontext_budget = 4096\n",
        )
        .unwrap();
        assert_eq!(cfg.corpus_dir, PathBuf::from("/data/c"));
        assert_eq!(cfg.encoder_backend, EncoderBackend::Mock { dim: 64, seed: 1 });
        assert_eq!(cfg.rag.context_budget, 4096);
        assert_eq!(cfg.rag.max_retries, 2);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = EngineConfig::default();
        cfg.rag.context_budget = 600;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let mut cfg = EngineConfig::default();
        cfg.weights.alpha_doc = 0.9;
        assert!(cfg.validate().is_err());
        assert!(EngineConfig::from_toml("k_backend = \"many\"").is_err());
        let cfg = EngineConfig { corpus_dir: "/nonexistent/x".into(), ..EngineConfig::default() };
        assert!(cfg.validate_paths().is_err());
    }

    #[test]
    fn secrets_not_shown() {
        let mut cfg = EngineConfig::default();
        cfg.llm.api_key = Some("sk-secret".into());
        cfg.api_token = Some("tok".into());
        let text = cfg.show().unwrap();
        assert!(!text.contains("sk-secret") && !text.contains("tok\""));
    }
}
