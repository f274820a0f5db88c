//! Deterministic stand-in for the chat model.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, LazyLock, Mutex};

use regex::Regex;

use super::llm::{GenerationParams, LlmClient};
use super::prompt::{PromptBundle, Rendering, Task};
use crate::error::{Error, Result};
use crate::ingest::split_sentences;

pub type CohortRule = Arc<dyn Fn(&str) -> bool + Send + Sync>;

/// Reply style. Every mode answers retrieval prompts by echoing the query
/// with the cited case ids, and IHC prompts with the first `k` candidates
/// in the order listed.
#[derive(Clone)]
pub enum StubMode {
    Echo,
    /// Cohort prompts get `decision = rule(report text)`.
    Rule(CohortRule),
    /// Synoptic transforms get labeled fields pulled from the report.
    Structured,
    /// Patient-friendly transforms get short plain sentences, other kinds
    /// get the report sentences unchanged.
    Simplify,
    Unavailable,
}

impl fmt::Debug for StubMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StubMode::Echo => "Echo",
            StubMode::Rule(_) => "Rule",
            StubMode::Structured => "Structured",
            StubMode::Simplify => "Simplify",
            StubMode::Unavailable => "Unavailable",
        })
    }
}

#[derive(Debug)]
pub struct StubLlm {
    mode: StubMode,
    failures: Mutex<HashMap<String, usize>>,
    calls: AtomicUsize,
    captured: Mutex<Vec<PromptBundle>>,
}

pub const UNPARSEABLE_REPLY: &str = "I need to think about this case more carefully before deciding.";

const PLAIN_SENTENCES: [&str; 6] = [
    "We looked at your sample.",
    "The test found a change in the cells.",
    "This part looks the way it should.",
    "We checked the edges of the tissue.",
    "Your doctor will talk with you about it.",
    "You can ask us about any word here.",
];

static SIZE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*cm\b").unwrap());
static STAGE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[ypr]?p?T(?:[0-4][a-d]?|is|x)\s*N(?:[0-3][a-c]?|x)(?:\s*M[01x])?\b").unwrap());

impl StubLlm {
    pub fn new(mode: StubMode) -> Self {
        StubLlm { mode, failures: Mutex::new(HashMap::new()), calls: AtomicUsize::new(0), captured: Mutex::new(Vec::new()) }
    }

    pub fn echo() -> Self {
        StubLlm::new(StubMode::Echo)
    }

    pub fn rule(f: impl Fn(&str) -> bool + Send + Sync + 'static) -> Self {
        StubLlm::new(StubMode::Rule(Arc::new(f)))
    }

    pub fn structured() -> Self {
        StubLlm::new(StubMode::Structured)
    }

    pub fn simplify() -> Self {
        StubLlm::new(StubMode::Simplify)
    }

    pub fn unavailable() -> Self {
        StubLlm::new(StubMode::Unavailable)
    }

    /// The first `n` cohort replies for `case_number` are unparseable.
    pub fn failing(self, case_number: &str, n: usize) -> Self {
        self.failures.lock().unwrap().insert(case_number.to_string(), n);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Every prompt received, in arrival order.
    pub fn captured(&self) -> Vec<PromptBundle> {
        self.captured.lock().unwrap().clone()
    }

    fn cohort_reply(&self, bundle: &PromptBundle, case_number: &str) -> String {
        {
            let mut failures = self.failures.lock().unwrap();
            if let Some(left) = failures.get_mut(case_number).filter(|n| **n > 0) {
                *left -= 1;
                return UNPARSEABLE_REPLY.to_string();
            }
        }
        let report = bundle.block("PATHOLOGY REPORT").unwrap_or("");
        let (decision, rationale) = match &self.mode {
            StubMode::Rule(rule) if rule(report) => (1, "meets the inclusion criteria"),
            StubMode::Rule(_) => (0, "does not meet the criteria"),
            _ => (0, "no decision rule configured"),
        };
        let obj = serde_json::json!({ "case_number": case_number, "decision": decision, "rationale": rationale });
        format!("Decision follows.\n{obj}")
    }

    fn transform_reply(&self, bundle: &PromptBundle, kind: Rendering) -> String {
        let report = bundle.block("PATHOLOGY REPORT").unwrap_or("");
        match (&self.mode, kind) {
            (StubMode::Structured, Rendering::Synoptic) => synoptic_fields(report),
            (StubMode::Simplify, Rendering::PatientFriendly) => {
                let n = split_sentences(report).len().max(1);
                PLAIN_SENTENCES.iter().cycle().take(n).copied().collect::<Vec<_>>().join(" ")
            }
            (StubMode::Simplify, _) => split_sentences(report).join(" "),
            _ => format!("{} rendering of the report:\n{report}", kind.as_str()),
        }
    }
}

fn ihc_reply(bundle: &PromptBundle, k: usize) -> String {
    let markers: Vec<serde_json::Value> = bundle
        .block("CANDIDATE MARKERS")
        .unwrap_or("")
        .lines()
        .filter_map(|line| {
            let name = line.rfind(" (").map_or(line, |i| &line[..i]).trim();
            (!name.is_empty()).then(|| serde_json::json!({ "name": name, "rationale": "frequent in similar cases" }))
        })
        .take(k)
        .collect();
    serde_json::json!({ "markers": markers }).to_string()
}

/// `Field: value` lines for the synoptic elements the stub can find.
pub fn synoptic_fields(report: &str) -> String {
    let sentences = split_sentences(report);
    let find = |needle: &str| {
        sentences
            .iter()
            .find(|s| s.to_lowercase().contains(needle))
            .cloned()
            .unwrap_or_else(|| "MISSING - requires manual completion".into())
    };
    let size = SIZE_RE
        .captures(report)
        .map_or_else(|| "MISSING - requires manual completion".to_string(), |c| format!("{} cm", &c[1]));
    let stage = STAGE_RE
        .find(report)
        .map_or_else(|| "MISSING - requires manual completion".to_string(), |m| m.as_str().to_string());
    format!(
        "Tumor size: {size}\nMargins: {}\nLymph node status: {}\nStaging: {stage}",
        find("margin"),
        find("lymph node")
    )
}

impl LlmClient for StubLlm {
    fn complete(&self, bundle: &PromptBundle, _params: &GenerationParams) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.captured.lock().unwrap().push(bundle.clone());
        if matches!(self.mode, StubMode::Unavailable) {
            return Err(Error::ProviderUnavailable("stub endpoint is down".into()));
        }
        Ok(match &bundle.task {
            Task::Cohort { case_number, .. } => self.cohort_reply(bundle, case_number),
            Task::Ihc { k } => ihc_reply(bundle, *k),
            Task::Transform { rendering } => self.transform_reply(bundle, *rendering),
            Task::CaseRetrieval | Task::WhatIf => {
                let cited: Vec<&str> = bundle.context_block.iter().map(|e| e.report_id.as_str()).collect();
                let cited = if cited.is_empty() { "none".to_string() } else { cited.join(", ") };
                format!("Answer to: {}\nCited cases: {cited}", bundle.user_query)
            }
        })
    }
}
