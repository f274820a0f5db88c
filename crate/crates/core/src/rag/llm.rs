use std::fmt::Debug;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompt::PromptBundle;
use crate::error::{Error, Result};
use crate::retry::{with_backoff, MAX_ATTEMPTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: usize,
    pub seed: Option<u64>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams { temperature: 0.7, max_tokens: 512, seed: None }
    }
}

pub trait LlmClient: Debug + Send + Sync {
    fn complete(&self, bundle: &PromptBundle, params: &GenerationParams) -> Result<String>;
}

/// Largest prompt estimate allowed when `params.max_tokens` of the window
/// are reserved for the completion.
pub fn prompt_budget(context_budget: usize, params: &GenerationParams) -> usize {
    context_budget.saturating_sub(params.max_tokens)
}

/// Checks the bundle against the budget, then calls the model.
pub fn generate(
    bundle: &PromptBundle,
    llm: &dyn LlmClient,
    params: &GenerationParams,
    context_budget: usize,
) -> Result<String> {
    let budget = prompt_budget(context_budget, params);
    if bundle.token_estimate > budget {
        return Err(Error::BudgetExhausted { needed: bundle.token_estimate, budget });
    }
    llm.complete(bundle, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint_url: String::new(),
            model: "mistral-7b-instruct".into(),
            api_key: None,
            timeout_secs: 120,
        }
    }
}

impl LlmConfig {
    /// Defaults overridden by `LLM_URL`, `LLM_KEY` and `LLM_MODEL`.
    pub fn from_env() -> Self {
        let mut cfg = LlmConfig::default();
        cfg.apply_env();
        cfg
    }

    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var("LLM_URL") {
            self.endpoint_url = url;
        }
        if let Ok(key) = std::env::var("LLM_KEY") {
            self.api_key = Some(key);
        }
        if let Ok(model) = std::env::var("LLM_MODEL") {
            self.model = model;
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: String,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

/// Client for an OpenAI-style `/chat/completions` endpoint. The system
/// instruction goes in the system message and the remaining blocks in a
/// single user message.
#[derive(Debug, Clone)]
pub struct HttpLlm {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: Option<String>,
    backoff: Duration,
}

impl HttpLlm {
    pub fn new(cfg: &LlmConfig) -> Result<Self> {
        if cfg.endpoint_url.is_empty() {
            return Err(Error::InvalidConfig("LLM endpoint URL is not set (LLM_URL)".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("HTTP client: {e}")))?;
        Ok(HttpLlm {
            client,
            url: cfg.endpoint_url.clone(),
            model: cfg.model.clone(),
            api_key: cfg.api_key.clone(),
            backoff: Duration::from_millis(500),
        })
    }

    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    fn call(&self, bundle: &PromptBundle, params: &GenerationParams) -> Result<String> {
        let body = ChatRequest {
            model: &self.model,
            messages: vec![
                ChatMessage { role: "system", content: bundle.system_instruction.clone() },
                ChatMessage { role: "user", content: bundle.user_message() },
            ],
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            seed: params.seed,
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Error::ProviderUnavailable(format!("completion request: {e}")))?;
        let status = resp.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(Error::ProviderUnavailable(format!("completion endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(Error::InvalidInput(format!("completion endpoint rejected the request with {status}")));
        }
        let parsed: ChatResponse =
            resp.json().map_err(|e| Error::ProviderUnavailable(format!("malformed completion response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::ProviderUnavailable("completion response has no content".into()))
    }
}

impl LlmClient for HttpLlm {
    fn complete(&self, bundle: &PromptBundle, params: &GenerationParams) -> Result<String> {
        with_backoff(MAX_ATTEMPTS, self.backoff, || self.call(bundle, params))
    }
}
