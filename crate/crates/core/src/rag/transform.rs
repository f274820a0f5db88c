use super::llm::{generate, LlmClient};
use super::prompt::{transform_prompt, Rendering};
use super::{fit_text, RagConfig};
use crate::error::Result;
use crate::ingest::ReportDoc;

/// Rewrites one report in the requested format. Only the task block of
/// the prompt depends on `kind`.
pub fn transform_report(doc: &ReportDoc, kind: Rendering, llm: &dyn LlmClient, cfg: &RagConfig) -> Result<String> {
    cfg.validate()?;
    let est = cfg.estimator();
    let bundle = fit_text(&doc.clean_text, cfg.prompt_budget(), |t| transform_prompt(&doc.report_id, t, kind, &est))?;
    generate(&bundle, llm, &cfg.generation, cfg.context_budget)
}
