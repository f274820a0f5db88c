//! Retrieval-grounded prompting and the generative workflows.

mod cohort;
mod context;
mod decision;
mod ihc;
mod llm;
mod prompt;
mod qa;
mod stub;
mod transform;

use serde::{Deserialize, Serialize};

pub use cohort::{
    parse_criteria_text, run_cohort, write_cohort_results, CohortOutcome, CohortSpec, CohortStats, Prefilter,
    DECISIONS_FILE, PREFILTER_RATIONALE, STATS_FILE,
};
pub use context::{
    assemble_context, context_tokens, render_entry, ContextEntry, DEFAULT_MIN_SHARE, MIN_CONTEXT_BUDGET,
    TRUNCATION_MARK,
};
pub use decision::{parse_decision, CohortDecision, ParseStatus};
pub use ihc::{ensure_masked, recommend_ihc, recommend_ihc_for_report, IhcRecommendation, RecommendedMarker};
pub use llm::{generate, prompt_budget, GenerationParams, HttpLlm, LlmClient, LlmConfig};
pub use prompt::{
    case_retrieval_prompt, cohort_output_format, cohort_prompt, ihc_prompt, render_context, render_criteria,
    transform_prompt, what_if_prompt, PromptBlock, PromptBundle, Rendering, Task, CASE_RETRIEVAL_RESPONSE,
    CASE_RETRIEVAL_SYSTEM, COHORT_SYSTEM, NO_REPORTS_MARKER,
};
pub use qa::{answer_query, case_prompt, what_if, what_if_prompt_for, QaAnswer};
pub use stub::{synoptic_fields, CohortRule, StubLlm, StubMode, UNPARSEABLE_REPLY};
pub use transform::transform_report;

use crate::error::{Error, Result};
use crate::tokens::CharRatioEstimator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RagConfig {
    /// Model context window shared by prompt and completion.
    pub context_budget: usize,
    pub min_share_tokens: usize,
    pub chars_per_token: usize,
    pub max_retries: usize,
    pub top_k: usize,
    pub ihc_neighbors: usize,
    pub canonical_panel: Vec<String>,
    pub generation: GenerationParams,
}

impl Default for RagConfig {
    fn default() -> Self {
        RagConfig {
            context_budget: 8192,
            min_share_tokens: DEFAULT_MIN_SHARE,
            chars_per_token: 4,
            max_retries: 2,
            top_k: 5,
            ihc_neighbors: 10,
            canonical_panel: Vec::new(),
            generation: GenerationParams::default(),
        }
    }
}

impl RagConfig {
    pub fn estimator(&self) -> CharRatioEstimator {
        CharRatioEstimator { chars_per_token: self.chars_per_token.max(1) }
    }

    pub fn prompt_budget(&self) -> usize {
        prompt_budget(self.context_budget, &self.generation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt_budget() < MIN_CONTEXT_BUDGET {
            return Err(Error::InvalidConfig(format!(
                "context_budget {} leaves fewer than {MIN_CONTEXT_BUDGET} prompt tokens after max_tokens {}",
                self.context_budget, self.generation.max_tokens
            )));
        }
        if self.top_k < 1 || self.ihc_neighbors < 1 || self.chars_per_token < 1 {
            return Err(Error::InvalidConfig("top_k, ihc_neighbors and chars_per_token must be at least 1".into()));
        }
        Ok(())
    }
}

/// Builds the prompt with the longest head of `text` that keeps the whole
/// bundle within the prompt budget.
pub(crate) fn fit_text(
    text: &str,
    budget: usize,
    build: impl Fn(&str) -> PromptBundle,
) -> Result<PromptBundle> {
    let full = build(text);
    if full.token_estimate <= budget {
        return Ok(full);
    }
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain([text.len()]).collect();
    let fits = |n: usize| build(&text[..bounds[n]]).token_estimate <= budget;
    if !fits(0) {
        return Err(Error::BudgetExhausted { needed: build("").token_estimate, budget });
    }
    let (mut lo, mut hi) = (0, bounds.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(build(&text[..bounds[lo]]))
}

/// Assembles as much ranked context as fits next to the fixed blocks.
pub(crate) fn fit_context<'a>(
    hits: &[crate::retrieval::RankedHit],
    report_text: impl Fn(&str) -> Option<&'a str> + Copy,
    cfg: &RagConfig,
    build: impl Fn(Vec<ContextEntry>) -> PromptBundle,
) -> Result<PromptBundle> {
    let budget = cfg.prompt_budget();
    let est = cfg.estimator();
    let empty = build(Vec::new());
    if hits.is_empty() {
        return Ok(empty);
    }
    let mut ctx_budget = budget.saturating_sub(empty.token_estimate);
    loop {
        if ctx_budget < MIN_CONTEXT_BUDGET {
            return Err(Error::BudgetExhausted { needed: empty.token_estimate + MIN_CONTEXT_BUDGET, budget });
        }
        let ctx = assemble_context(hits, report_text, ctx_budget, cfg.min_share_tokens, &est)?;
        let bundle = build(ctx);
        if bundle.token_estimate <= budget {
            return Ok(bundle);
        }
        ctx_budget -= (bundle.token_estimate - budget).min(ctx_budget);
    }
}
