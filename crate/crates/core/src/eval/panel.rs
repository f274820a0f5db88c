use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelCase {
    pub case_id: String,
    /// Ranked, duplicate-free.
    pub recommended: Vec<String>,
    pub truth: Vec<String>,
}

/// Macro means over cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelMetrics {
    pub hit_at_1: f64,
    pub hit_at_3: f64,
    pub hit_at_5: f64,
    pub br_at_5: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub jaccard: f64,
    pub n: usize,
}

/// Per-case scores before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseScores {
    pub hit_at_1: f64,
    pub hit_at_3: f64,
    pub hit_at_5: f64,
    pub br_at_5: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub jaccard: f64,
}

pub fn case_scores(case: &PanelCase) -> Result<CaseScores> {
    let truth: HashSet<&str> = case.truth.iter().map(String::as_str).collect();
    if truth.is_empty() {
        return Err(Error::InvalidCase { case_id: case.case_id.clone(), reason: "empty ground-truth panel".into() });
    }
    let rec: HashSet<&str> = case.recommended.iter().map(String::as_str).collect();
    if rec.len() != case.recommended.len() {
        return Err(Error::InvalidCase { case_id: case.case_id.clone(), reason: "duplicate recommended marker".into() });
    }
    let top = |k: usize| case.recommended.iter().take(k).filter(|m| truth.contains(m.as_str())).count();
    let hit = |k: usize| if top(k) > 0 { 1.0 } else { 0.0 };
    let inter = rec.intersection(&truth).count() as f64;
    let union = rec.union(&truth).count() as f64;
    let precision = if rec.is_empty() { 0.0 } else { inter / rec.len() as f64 };
    let recall = inter / truth.len() as f64;
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(CaseScores {
        hit_at_1: hit(1),
        hit_at_3: hit(3),
        hit_at_5: hit(5),
        br_at_5: top(5) as f64 / truth.len() as f64,
        precision,
        recall,
        f1,
        jaccard: inter / union,
    })
}

pub fn panel_metrics(cases: &[PanelCase]) -> Result<PanelMetrics> {
    if cases.is_empty() {
        return Err(Error::EmptyInput("panel cases".into()));
    }
    let scores = cases.iter().map(case_scores).collect::<Result<Vec<_>>>()?;
    let n = scores.len() as f64;
    let mean = |f: fn(&CaseScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    Ok(PanelMetrics {
        hit_at_1: mean(|s| s.hit_at_1),
        hit_at_3: mean(|s| s.hit_at_3),
        hit_at_5: mean(|s| s.hit_at_5),
        br_at_5: mean(|s| s.br_at_5),
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        jaccard: mean(|s| s.jaccard),
        n: scores.len(),
    })
}
