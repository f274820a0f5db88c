//! Retrieval, panel, text and interval metrics.

mod panel;
mod ranking;
mod readability;
mod stats;
mod text;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use panel::{case_scores, panel_metrics, CaseScores, PanelCase, PanelMetrics};
pub use ranking::{hits_at_k, rank_metrics, recall_at_k, RankEntry, RankLog, RankMetrics};
pub use readability::{count_sentences, count_syllables, readability, readability_from_counts, words, Readability};
pub use stats::{paired_bootstrap, proportion_report, quantile, wilson, DEFAULT_RESAMPLES, DEFAULT_Z};
pub use text::{bleu4, rouge, text_tokens, RougeVariant, TextScore, BLEU_EPSILON};

use crate::error::{Error, Result};

pub const DEFAULT_CUTOFF: usize = 200;
pub const DEFAULT_KS: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bootstrap,
    Wilson,
    Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
    pub method: Method,
}

impl MetricReport {
    pub fn point(name: impl Into<String>, value: f64, n: usize) -> Self {
        MetricReport { name: name.into(), value, ci_low: None, ci_high: None, n, method: Method::Point }
    }
}

/// One candidate/reference pair for text metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPair {
    #[serde(default)]
    pub id: String,
    pub candidate: String,
    pub reference: String,
}

/// A line of a stats input: paired samples or a success count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatRequest {
    Paired { name: String, a: Vec<f64>, b: Vec<f64> },
    Proportion { name: String, successes: usize, n: usize },
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e)))
        .collect()
}

pub fn read_rank_log(path: &Path) -> Result<RankLog> {
    RankLog::new(read_jsonl(path)?)
}

/// Recall@k with Wilson intervals for each `k`, then MRR and nDCG at `cutoff`.
pub fn evaluate_ranks(log: &RankLog, ks: &[usize], cutoff: usize) -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    for &k in ks {
        recall_at_k(log, k)?;
        out.push(proportion_report(&format!("recall@{k}"), hits_at_k(log, k), log.len())?);
    }
    let m = rank_metrics(log, cutoff)?;
    out.push(MetricReport::point(format!("mrr@{cutoff}"), m.mrr, log.len()));
    out.push(MetricReport::point(format!("ndcg@{cutoff}"), m.ndcg, log.len()));
    Ok(out)
}

pub fn evaluate_panels(cases: &[PanelCase]) -> Result<Vec<MetricReport>> {
    let m = panel_metrics(cases)?;
    Ok([
        ("hit@1", m.hit_at_1),
        ("hit@3", m.hit_at_3),
        ("hit@5", m.hit_at_5),
        ("br@5", m.br_at_5),
        ("precision", m.precision),
        ("recall", m.recall),
        ("f1", m.f1),
        ("jaccard", m.jaccard),
    ]
    .into_iter()
    .map(|(name, v)| MetricReport::point(name, v, m.n))
    .collect())
}

/// Mean ROUGE-1/2/L F1, BLEU-4 and candidate readability over the pairs.
/// Pairs with an empty side score 0 and are counted in `empty_pairs`.
pub fn evaluate_text(pairs: &[TextPair]) -> Result<Vec<MetricReport>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("text pairs".into()));
    }
    let n = pairs.len();
    let mean = |f: &dyn Fn(&TextPair) -> TextScore| pairs.iter().map(|p| f(p).value).sum::<f64>() / n as f64;
    let empty = pairs.iter().filter(|p| bleu4(&p.candidate, &p.reference).empty_input).count();
    let mut out = vec![
        MetricReport::point("rouge1_f1", mean(&|p| rouge(&p.candidate, &p.reference, RougeVariant::One)), n),
        MetricReport::point("rouge2_f1", mean(&|p| rouge(&p.candidate, &p.reference, RougeVariant::Two)), n),
        MetricReport::point("rougeL_f1", mean(&|p| rouge(&p.candidate, &p.reference, RougeVariant::L)), n),
        MetricReport::point("bleu4", mean(&|p| bleu4(&p.candidate, &p.reference)), n),
        MetricReport::point("empty_pairs", empty as f64, n),
    ];
    let scored: Vec<Readability> = pairs.iter().filter_map(|p| readability(&p.candidate).ok()).collect();
    if !scored.is_empty() {
        let m = scored.len();
        out.push(MetricReport::point("fk_grade", scored.iter().map(|r| r.fk_grade).sum::<f64>() / m as f64, m));
        out.push(MetricReport::point("reading_ease", scored.iter().map(|r| r.reading_ease).sum::<f64>() / m as f64, m));
    }
    Ok(out)
}

pub fn evaluate_stats(requests: &[StatRequest], resamples: usize, seed: u64) -> Result<Vec<MetricReport>> {
    requests
        .iter()
        .map(|r| match r {
            StatRequest::Paired { name, a, b } => {
                let mut rep = paired_bootstrap(a, b, resamples, seed)?;
                rep.name = name.clone();
                Ok(rep)
            }
            StatRequest::Proportion { name, successes, n } => proportion_report(name, *successes, *n),
        })
        .collect()
}

pub fn write_metrics(path: &Path, reports: &[MetricReport]) -> Result<()> {
    let json = serde_json::to_string_pretty(reports).map_err(|e| Error::json("metrics", e))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}
