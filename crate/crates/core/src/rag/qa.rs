use serde::{Deserialize, Serialize};

use super::llm::{generate, LlmClient};
use super::prompt::{case_retrieval_prompt, what_if_prompt, PromptBundle};
use super::{fit_context, fit_text, RagConfig};
use crate::error::{Error, Result};
use crate::retrieval::{Engine, RankedHit, SearchRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub answer: String,
    pub hits: Vec<RankedHit>,
    pub prompt: PromptBundle,
}

/// Case-retrieval prompt for hits already ranked by the engine.
pub fn case_prompt(engine: &Engine, hits: &[RankedHit], query: &str, cfg: &RagConfig) -> Result<PromptBundle> {
    let est = cfg.estimator();
    let corpus = engine.corpus();
    fit_context(hits, |id| corpus.doc(id).map(|d| d.clean_text.as_str()), cfg, |ctx| {
        case_retrieval_prompt(ctx, query, &est)
    })
}

/// Retrieves the top `k` reports for `query` and asks the model to answer
/// from them.
pub fn answer_query(engine: &Engine, llm: &dyn LlmClient, query: &str, k: usize, cfg: &RagConfig) -> Result<QaAnswer> {
    cfg.validate()?;
    let hits = engine.search(&SearchRequest::new(query, k))?;
    let prompt = case_prompt(engine, &hits, query, cfg)?;
    let answer = generate(&prompt, llm, &cfg.generation, cfg.context_budget)?;
    Ok(QaAnswer { answer, hits, prompt })
}

/// What-if prompt: the trainee's case (cut to at most half the prompt
/// budget), the reports most similar to it, then the question.
pub fn what_if_prompt_for(
    engine: &Engine,
    case_text: &str,
    question: &str,
    k: usize,
    cfg: &RagConfig,
) -> Result<(PromptBundle, Vec<RankedHit>)> {
    if case_text.trim().is_empty() || question.trim().is_empty() {
        return Err(Error::EmptyInput("what-if needs both a case and a question".into()));
    }
    let est = cfg.estimator();
    let half = cfg.prompt_budget() / 2;
    let case = fit_text(case_text, half, |t| what_if_prompt(t, Vec::new(), question, &est))?;
    let case = case.block("CASE").unwrap_or_default().to_string();
    let hits = engine.search(&SearchRequest::new(format!("{case_text}\n{question}"), k))?;
    let corpus = engine.corpus();
    let prompt = fit_context(&hits, |id| corpus.doc(id).map(|d| d.clean_text.as_str()), cfg, |ctx| {
        what_if_prompt(&case, ctx, question, &est)
    })?;
    Ok((prompt, hits))
}

pub fn what_if(
    engine: &Engine,
    llm: &dyn LlmClient,
    case_text: &str,
    question: &str,
    k: usize,
    cfg: &RagConfig,
) -> Result<QaAnswer> {
    cfg.validate()?;
    let (prompt, hits) = what_if_prompt_for(engine, case_text, question, k, cfg)?;
    let answer = generate(&prompt, llm, &cfg.generation, cfg.context_budget)?;
    Ok(QaAnswer { answer, hits, prompt })
}
