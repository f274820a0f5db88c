use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::context::{render_entry, ContextEntry};
use crate::error::{Error, Result};
use crate::tokens::TokenEstimator;

pub const CASE_RETRIEVAL_SYSTEM: &str = "You are an expert pathology assistant. Your role is to synthesize information \
exclusively from the provided pathology reports. Base all responses on evidence found in these reports and cite \
specific cases when making claims. Do not introduce information beyond what is present in the retrieved documents.";

pub const CASE_RETRIEVAL_RESPONSE: &str = "Provide a comprehensive answer based on the reports above, citing \
specific case identifiers when referencing information.";

pub const WHAT_IF_SYSTEM: &str = "You are an expert pathology educator. A trainee describes a case and a hypothetical \
change to it. Use the provided reports and similar historical cases, together with established pathology knowledge, \
to explain how the diagnostic workup, differential diagnosis, or prognosis would differ. This is an educational \
exercise, not clinical advice.";

pub const WHAT_IF_RESPONSE: &str = "Explain how the hypothetical change would alter the workup, differential \
diagnosis, or prognosis. Cite case identifiers for any evidence taken from the reports above and state clearly \
when you rely on general knowledge instead.";

pub const COHORT_SYSTEM: &str = "You are tasked with determining whether a pathology case meets specific inclusion \
and exclusion criteria for a research cohort. Evaluate the case based solely on information present in the report. \
Return your decision in JSON format.";

pub const COHORT_DECISION_LEGEND: &str = "Where decision=1 means INCLUDE and decision=0 means EXCLUDE.";

pub const COHORT_RETRY_INSTRUCTION: &str = "Your previous reply could not be parsed. Respond with JSON only: a single \
object in the output format above and no other text.";

pub const IHC_SYSTEM: &str = "You are an expert pathology assistant recommending an immunohistochemistry (IHC) panel. \
Rank markers using the case details and the panels ordered for similar historical cases. Recommend only markers from \
the candidate list. Recommendations are advisory and require pathologist review.";

pub const TRANSFORM_SYSTEM: &str = "You are an expert pathology assistant. Rewrite the pathology report below as \
instructed. Preserve every diagnostic fact and do not add findings that are not in the report.";

pub const NO_REPORTS_MARKER: &str = "(no retrieved reports)";

/// Output formats for report transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rendering {
    Synoptic,
    ClinicalSummary,
    Oncologist,
    TumorBoard,
    PatientFriendly,
}

impl Rendering {
    pub const ALL: [Rendering; 5] = [
        Rendering::Synoptic,
        Rendering::ClinicalSummary,
        Rendering::Oncologist,
        Rendering::TumorBoard,
        Rendering::PatientFriendly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rendering::Synoptic => "synoptic",
            Rendering::ClinicalSummary => "clinical_summary",
            Rendering::Oncologist => "oncologist",
            Rendering::TumorBoard => "tumor_board",
            Rendering::PatientFriendly => "patient_friendly",
        }
    }

    pub fn instruction(self) -> &'static str {
        match self {
            Rendering::Synoptic => {
                "Convert the report into a CAP-style synoptic report. Extract the key diagnostic elements into \
labeled fields, one per line as 'Field: value', covering at least tumor size, margins, lymph node status, and \
staging parameters, flagging any missing elements as 'MISSING - requires manual completion'."
            }
            Rendering::ClinicalSummary => {
                "Condense the report into a concise clinical summary for the treating physician, covering the \
diagnosis, key findings, staging, and any actionable results."
            }
            Rendering::Oncologist => {
                "Write a summary for an oncologist emphasizing tumor type and grade, stage, margins, lymph nodes, \
and any prognostic or predictive biomarkers relevant to treatment planning."
            }
            Rendering::TumorBoard => {
                "Write a structured case presentation for a multidisciplinary tumor board with headings for \
clinical context, pathologic diagnosis, staging, biomarkers, and open questions for discussion."
            }
            Rendering::PatientFriendly => {
                "Explain the report to the patient in plain language at a 6th-8th grade reading level. Use short \
sentences and common words, explain any medical term you keep, and keep the diagnosis accurate."
            }
        }
    }
}

impl fmt::Display for Rendering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rendering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rendering::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown rendering kind {s:?}")))
    }
}

/// Which workflow a prompt belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    CaseRetrieval,
    WhatIf,
    Cohort { case_number: String, retry: bool },
    Ihc { k: usize },
    Transform { rendering: Rendering },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBlock {
    pub title: String,
    pub body: String,
}

/// A fully rendered prompt. `blocks` holds everything after the system
/// instruction in display order; the named fields are views into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub task: Task,
    pub system_instruction: String,
    pub context_block: Vec<ContextEntry>,
    pub user_query: String,
    pub response_instruction: String,
    pub blocks: Vec<PromptBlock>,
    pub token_estimate: usize,
}

impl PromptBundle {
    fn new(
        task: Task,
        system_instruction: &str,
        context_block: Vec<ContextEntry>,
        user_query: String,
        response_instruction: String,
        blocks: Vec<(&str, String)>,
        estimator: &dyn TokenEstimator,
    ) -> Self {
        let mut bundle = PromptBundle {
            task,
            system_instruction: system_instruction.to_string(),
            context_block,
            user_query,
            response_instruction,
            blocks: blocks.into_iter().map(|(t, body)| PromptBlock { title: t.to_string(), body }).collect(),
            token_estimate: 0,
        };
        bundle.token_estimate = estimator.estimate(&bundle.render());
        bundle
    }

    /// The whole prompt as one text, system instruction first.
    pub fn render(&self) -> String {
        let mut out = format!("[SYSTEM INSTRUCTION]\n{}\n", self.system_instruction);
        out.push_str(&self.user_message());
        out
    }

    /// Everything after the system instruction.
    pub fn user_message(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push('[');
            out.push_str(&b.title);
            out.push_str("]\n");
            out.push_str(&b.body);
            out.push('\n');
        }
        out
    }

    pub fn block(&self, title: &str) -> Option<&str> {
        self.blocks.iter().find(|b| b.title == title).map(|b| b.body.as_str())
    }
}

pub fn render_context(entries: &[ContextEntry]) -> String {
    if entries.is_empty() {
        return NO_REPORTS_MARKER.to_string();
    }
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| render_entry(i + 1, &e.report_id, &e.text))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn case_retrieval_prompt(context: Vec<ContextEntry>, query: &str, est: &dyn TokenEstimator) -> PromptBundle {
    let blocks = vec![
        ("RETRIEVED REPORTS", render_context(&context)),
        ("USER QUERY", query.to_string()),
        ("RESPONSE INSTRUCTION", CASE_RETRIEVAL_RESPONSE.to_string()),
    ];
    PromptBundle::new(Task::CaseRetrieval, CASE_RETRIEVAL_SYSTEM, context, query.to_string(), CASE_RETRIEVAL_RESPONSE.into(), blocks, est)
}

pub fn what_if_prompt(
    case_text: &str,
    context: Vec<ContextEntry>,
    question: &str,
    est: &dyn TokenEstimator,
) -> PromptBundle {
    let blocks = vec![
        ("CASE", case_text.to_string()),
        ("RETRIEVED REPORTS", render_context(&context)),
        ("HYPOTHETICAL QUESTION", question.to_string()),
        ("RESPONSE INSTRUCTION", WHAT_IF_RESPONSE.to_string()),
    ];
    PromptBundle::new(Task::WhatIf, WHAT_IF_SYSTEM, context, question.to_string(), WHAT_IF_RESPONSE.into(), blocks, est)
}

/// Criteria text as it appears in the cohort prompt.
pub fn render_criteria(inclusion: &str, exclusion: &str) -> String {
    let mut parts = Vec::new();
    if !inclusion.trim().is_empty() {
        parts.push(format!("Include: {}", inclusion.trim()));
    }
    if !exclusion.trim().is_empty() {
        parts.push(format!("Exclude: {}", exclusion.trim()));
    }
    parts.join("\n")
}

pub fn cohort_output_format(case_number: &str) -> String {
    let quoted = serde_json::to_string(case_number).unwrap_or_else(|_| format!("\"{case_number}\""));
    format!("{{\"case_number\": {quoted}, \"decision\": 0 or 1, \"rationale\": \"brief explanation\"}}\n{COHORT_DECISION_LEGEND}")
}

pub fn cohort_prompt(
    criteria: &str,
    case_number: &str,
    report_text: &str,
    retry: bool,
    est: &dyn TokenEstimator,
) -> PromptBundle {
    let mut blocks = vec![
        ("COHORT CRITERIA", criteria.to_string()),
        ("PATHOLOGY REPORT", report_text.to_string()),
        ("OUTPUT FORMAT", cohort_output_format(case_number)),
    ];
    if retry {
        blocks.push(("RETRY INSTRUCTION", COHORT_RETRY_INSTRUCTION.to_string()));
    }
    let context = vec![ContextEntry { report_id: case_number.to_string(), text: report_text.to_string(), truncated: false }];
    let response = cohort_output_format(case_number);
    PromptBundle::new(
        Task::Cohort { case_number: case_number.to_string(), retry },
        COHORT_SYSTEM,
        context,
        criteria.to_string(),
        response,
        blocks,
        est,
    )
}

/// One line per candidate: `name (ordered in f of m similar cases)`.
pub fn ihc_prompt(
    case_context: &str,
    neighbor_panels: &[(String, Vec<String>)],
    candidates: &[(String, String)],
    k: usize,
    est: &dyn TokenEstimator,
) -> PromptBundle {
    let neighbors = if neighbor_panels.is_empty() {
        NO_REPORTS_MARKER.to_string()
    } else {
        neighbor_panels
            .iter()
            .map(|(id, markers)| {
                let panel = if markers.is_empty() { "no markers recorded".to_string() } else { markers.join(", ") };
                format!("Case {id}: {panel}")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let candidate_lines =
        candidates.iter().map(|(name, note)| format!("{name} ({note})")).collect::<Vec<_>>().join("\n");
    let response = format!(
        "{{\"markers\": [{{\"name\": \"<candidate marker>\", \"rationale\": \"one line\"}}]}}\nList at most {k} markers, \
most useful first, using only names from the candidate list."
    );
    let blocks = vec![
        ("CASE DETAILS", case_context.to_string()),
        ("PANELS IN SIMILAR CASES", neighbors),
        ("CANDIDATE MARKERS", candidate_lines),
        ("OUTPUT FORMAT", response.clone()),
    ];
    PromptBundle::new(Task::Ihc { k }, IHC_SYSTEM, Vec::new(), case_context.to_string(), response, blocks, est)
}

pub fn transform_prompt(report_id: &str, report_text: &str, kind: Rendering, est: &dyn TokenEstimator) -> PromptBundle {
    let blocks = vec![("PATHOLOGY REPORT", report_text.to_string()), ("TASK", kind.instruction().to_string())];
    let context = vec![ContextEntry { report_id: report_id.to_string(), text: report_text.to_string(), truncated: false }];
    PromptBundle::new(
        Task::Transform { rendering: kind },
        TRANSFORM_SYSTEM,
        context,
        String::new(),
        kind.instruction().to_string(),
        blocks,
        est,
    )
}
