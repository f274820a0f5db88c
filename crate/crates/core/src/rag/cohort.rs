use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::decision::{parse_decision, CohortDecision, ParseStatus};
use super::llm::{generate, LlmClient};
use super::prompt::{cohort_prompt, render_criteria};
use super::{fit_text, RagConfig};
use crate::error::{Error, Result};
use crate::ingest::ReportDoc;
use crate::retrieval::{Corpus, Engine, SearchRequest};

pub const DECISIONS_FILE: &str = "decisions.jsonl";
pub const STATS_FILE: &str = "stats.json";
pub const PREFILTER_RATIONALE: &str = "prefilter";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prefilter {
    pub query: String,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    #[serde(default)]
    pub inclusion_criteria: String,
    #[serde(default)]
    pub exclusion_criteria: String,
    #[serde(default)]
    pub prefilter: Option<Prefilter>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
}

fn default_concurrency() -> usize {
    4
}

impl CohortSpec {
    pub fn new(inclusion: impl Into<String>, exclusion: impl Into<String>) -> Self {
        CohortSpec {
            inclusion_criteria: inclusion.into(),
            exclusion_criteria: exclusion.into(),
            prefilter: None,
            concurrency: default_concurrency(),
        }
    }

    pub fn with_prefilter(mut self, query: impl Into<String>, threshold: f64) -> Self {
        self.prefilter = Some(Prefilter { query: query.into(), threshold });
        self
    }

    pub fn with_concurrency(mut self, n: usize) -> Self {
        self.concurrency = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.inclusion_criteria.trim().is_empty() && self.exclusion_criteria.trim().is_empty() {
            return Err(Error::InvalidConfig("cohort needs at least one inclusion or exclusion criterion".into()));
        }
        if let Some(p) = &self.prefilter {
            if !(p.threshold > 0.0 && p.threshold <= 1.0) {
                return Err(Error::InvalidConfig(format!("prefilter threshold must be in (0, 1], got {}", p.threshold)));
            }
            if p.query.trim().is_empty() {
                return Err(Error::InvalidConfig("prefilter query is empty".into()));
            }
        }
        if self.concurrency < 1 {
            return Err(Error::InvalidConfig("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn criteria_text(&self) -> String {
        render_criteria(&self.inclusion_criteria, &self.exclusion_criteria)
    }

    /// Reads a spec from `.json`, `.toml`, or plain text with `Include:` /
    /// `Exclude:` parts.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e)),
            Some("toml") => toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display()))),
            _ => Ok(parse_criteria_text(&text)),
        }
    }
}

/// Splits free text at the first `Exclude:` marker; text before it (minus a
/// leading `Include:`) is the inclusion criterion.
pub fn parse_criteria_text(text: &str) -> CohortSpec {
    let lower = text.to_lowercase();
    let (incl, excl) = match lower.find("exclude:") {
        Some(i) => (&text[..i], &text[i + "exclude:".len()..]),
        None => (text, ""),
    };
    let incl = incl.trim();
    let incl = if incl.to_lowercase().starts_with("include:") { &incl["include:".len()..] } else { incl };
    CohortSpec::new(incl.trim(), excl.trim())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub llm_calls: usize,
    pub seconds: f64,
    pub candidates: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortOutcome {
    /// One decision per report, ordered by report id.
    pub decisions: Vec<CohortDecision>,
    pub stats: CohortStats,
}

impl CohortOutcome {
    pub fn included(&self) -> Vec<&str> {
        self.decisions.iter().filter(|d| d.decision == Some(1)).map(|d| d.case_number.as_str()).collect()
    }
}

fn failed(case_number: &str, attempts: usize, err: &Error) -> CohortDecision {
    CohortDecision {
        case_number: case_number.to_string(),
        decision: None,
        rationale: err.to_string(),
        parse_status: ParseStatus::Failed,
        attempts,
    }
}

fn evaluate(doc: &ReportDoc, criteria: &str, llm: &dyn LlmClient, cfg: &RagConfig, calls: &AtomicUsize) -> CohortDecision {
    let est = cfg.estimator();
    let budget = cfg.prompt_budget();
    let mut attempts = 0;
    let mut last = Error::ParseFailure("no attempt made".into());
    for attempt in 0..=cfg.max_retries {
        let retry = attempt > 0;
        let bundle = match fit_text(&doc.clean_text, budget, |t| cohort_prompt(criteria, &doc.report_id, t, retry, &est)) {
            Ok(b) => b,
            Err(e) => return failed(&doc.report_id, attempts, &e),
        };
        attempts += 1;
        calls.fetch_add(1, Ordering::SeqCst);
        match generate(&bundle, llm, &cfg.generation, cfg.context_budget).and_then(|reply| parse_decision(&reply)) {
            Ok(d) => {
                return CohortDecision {
                    case_number: doc.report_id.clone(),
                    decision: d.decision,
                    rationale: d.rationale,
                    parse_status: if retry { ParseStatus::RetriedOk } else { ParseStatus::Ok },
                    attempts,
                };
            }
            Err(e @ Error::ParseFailure(_)) => last = e,
            Err(e) => return failed(&doc.report_id, attempts, &e),
        }
    }
    failed(&doc.report_id, attempts, &last)
}

/// Judges every report (or every prefilter hit) against the criteria with
/// `spec.concurrency` workers. Per-case failures are recorded, not raised.
/// `progress(done, total)` is called after each judged case.
pub fn run_cohort(
    spec: &CohortSpec,
    corpus: &Corpus,
    engine: Option<&Engine>,
    llm: &dyn LlmClient,
    cfg: &RagConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<CohortOutcome> {
    spec.validate()?;
    cfg.validate()?;
    let started = Instant::now();

    let mut candidates: Vec<&ReportDoc> = corpus.docs().iter().collect();
    if let Some(p) = &spec.prefilter {
        let engine = engine.ok_or_else(|| Error::InvalidConfig("prefilter needs an indexed corpus".into()))?;
        let keep: std::collections::HashSet<String> = if corpus.is_empty() {
            Default::default()
        } else {
            engine
                .search(&SearchRequest::new(p.query.clone(), corpus.len()))?
                .into_iter()
                .filter(|h| h.fused >= p.threshold)
                .map(|h| h.report_id)
                .collect()
        };
        candidates.retain(|d| keep.contains(&d.report_id));
    }

    let criteria = spec.criteria_text();
    let total = candidates.len();
    let calls = AtomicUsize::new(0);
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let results: Mutex<Vec<CohortDecision>> = Mutex::new(Vec::with_capacity(total));
    std::thread::scope(|s| {
        for _ in 0..spec.concurrency.min(total.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(doc) = candidates.get(i) else { break };
                let d = evaluate(doc, &criteria, llm, cfg, &calls);
                results.lock().unwrap().push(d);
                progress(done.fetch_add(1, Ordering::SeqCst) + 1, total);
            });
        }
    });

    let mut decisions = results.into_inner().unwrap();
    let judged: std::collections::HashSet<String> = decisions.iter().map(|d| d.case_number.clone()).collect();
    for doc in corpus.docs().iter().filter(|d| !judged.contains(&d.report_id)) {
        decisions.push(CohortDecision {
            case_number: doc.report_id.clone(),
            decision: Some(0),
            rationale: PREFILTER_RATIONALE.into(),
            parse_status: ParseStatus::Ok,
            attempts: 0,
        });
    }
    decisions.sort_by(|a, b| a.case_number.cmp(&b.case_number));
    let failures = decisions.iter().filter(|d| d.parse_status == ParseStatus::Failed).count();
    Ok(CohortOutcome {
        decisions,
        stats: CohortStats {
            llm_calls: calls.into_inner(),
            seconds: started.elapsed().as_secs_f64(),
            candidates: total,
            failures,
        },
    })
}

/// Writes `decisions.jsonl` and `stats.json` into `dir`.
pub fn write_cohort_results(dir: &Path, outcome: &CohortOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(DECISIONS_FILE);
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    for d in &outcome.decisions {
        let line = serde_json::to_string(d).map_err(|e| Error::json("cohort decision", e))?;
        writeln!(f, "{line}").map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(STATS_FILE);
    let stats = serde_json::to_string_pretty(&outcome.stats).map_err(|e| Error::json("cohort stats", e))?;
    fs::write(&path, stats).map_err(|e| Error::io(&path, e))
}
