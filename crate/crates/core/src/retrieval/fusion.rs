use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::ScoredId;
use crate::ingest::SectionLabel;

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Convex weights of the three per-report signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub alpha_doc: f64,
    pub alpha_chunk: f64,
    pub alpha_bm25: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights { alpha_doc: 0.5, alpha_chunk: 0.3, alpha_bm25: 0.2 }
    }
}

impl FusionWeights {
    pub fn new(alpha_doc: f64, alpha_chunk: f64, alpha_bm25: f64) -> Result<Self> {
        let w = FusionWeights { alpha_doc, alpha_chunk, alpha_bm25 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.alpha_doc, self.alpha_chunk, self.alpha_bm25];
        if parts.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig(format!("fusion weights must lie in [0, 1]: {self:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidConfig(format!("fusion weights must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

/// One report's fused result with its component scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub report_id: String,
    pub s_doc: f64,
    pub s_chunk: f64,
    pub s_bm25: f64,
    pub fused: f64,
    pub best_chunk_id: Option<String>,
    pub best_chunk_section: Option<SectionLabel>,
    pub snippet: String,
}

/// Per-report inputs to [`fuse`].
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub report_id: String,
    pub s_doc: f64,
    pub s_chunk: f64,
    pub best_chunk_id: Option<String>,
    pub s_bm25: f64,
}

/// Max doc-level similarity of one report; 0 when it has no doc hit.
pub fn compute_s_doc(doc_hits_for_report: &[ScoredId]) -> f64 {
    doc_hits_for_report.iter().map(|h| h.score).reduce(f64::max).unwrap_or(0.0)
}

/// Max chunk similarity of one report and the chunk attaining it (ties to
/// the smaller chunk id); `(0, None)` when it has no chunk hit.
pub fn compute_s_chunk(chunk_hits_for_report: &[ScoredId]) -> (f64, Option<String>) {
    chunk_hits_for_report
        .iter()
        .reduce(|best, h| if h.score > best.score || (h.score == best.score && h.id < best.id) { h } else { best })
        .map_or((0.0, None), |h| (h.score, Some(h.id.clone())))
}

/// Divides each raw BM25 score by the per-query maximum; everything is 0
/// when the maximum is not positive.
pub fn normalize_bm25(raw_scores: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let max = raw_scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    raw_scores
        .iter()
        .map(|(id, &s)| (id.clone(), if max > 0.0 { s / max } else { 0.0 }))
        .collect()
}

/// Groups the three backends' top-k lists by owning report. The candidate
/// set is the union of all reports seen by any backend.
pub fn gather_components(doc_hits: &[ScoredId], chunk_hits: &[ScoredId], bm25_hits: &[ScoredId]) -> Vec<Components> {
    let mut by_report: BTreeMap<&str, (Vec<ScoredId>, Vec<ScoredId>)> = BTreeMap::new();
    for h in doc_hits {
        by_report.entry(&h.owner).or_default().0.push(h.clone());
    }
    for h in chunk_hits {
        by_report.entry(&h.owner).or_default().1.push(h.clone());
    }
    let mut raw = BTreeMap::new();
    for h in bm25_hits {
        by_report.entry(&h.owner).or_default();
        raw.insert(h.owner.clone(), h.score);
    }
    let bm25 = normalize_bm25(&raw);
    by_report
        .into_iter()
        .map(|(report, (docs, chunks))| {
            let (s_chunk, best_chunk_id) = compute_s_chunk(&chunks);
            Components {
                report_id: report.to_string(),
                s_doc: compute_s_doc(&docs),
                s_chunk,
                best_chunk_id,
                s_bm25: bm25.get(report).copied().unwrap_or(0.0),
            }
        })
        .collect()
}

/// Linear combination per report, sorted by fused score (ties to the
/// smaller report id). Snippet and section fields are left empty.
pub fn fuse(components: Vec<Components>, weights: &FusionWeights) -> Result<Vec<RankedHit>> {
    weights.validate()?;
    let mut hits: Vec<RankedHit> = components
        .into_iter()
        .map(|c| RankedHit {
            fused: weights.alpha_doc * c.s_doc + weights.alpha_chunk * c.s_chunk + weights.alpha_bm25 * c.s_bm25,
            report_id: c.report_id,
            s_doc: c.s_doc,
            s_chunk: c.s_chunk,
            s_bm25: c.s_bm25,
            best_chunk_id: c.best_chunk_id,
            best_chunk_section: None,
            snippet: String::new(),
        })
        .collect();
    hits.sort_by(|a, b| b.fused.total_cmp(&a.fused).then_with(|| a.report_id.cmp(&b.report_id)));
    Ok(hits)
}
