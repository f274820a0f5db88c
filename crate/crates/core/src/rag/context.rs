use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::RankedHit;
use crate::tokens::TokenEstimator;

pub const MIN_CONTEXT_BUDGET: usize = 256;
pub const DEFAULT_MIN_SHARE: usize = 64;
pub const TRUNCATION_MARK: &str = " [...]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub report_id: String,
    pub text: String,
    pub truncated: bool,
}

/// How a context entry appears inside the prompt.
pub fn render_entry(position: usize, report_id: &str, text: &str) -> String {
    format!("Report {position} (case {report_id}): {text}")
}

/// Token cost of the entries as rendered, one line each.
pub fn context_tokens(estimator: &dyn TokenEstimator, entries: &[ContextEntry]) -> usize {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| estimator.estimate(&render_entry(i + 1, &e.report_id, &e.text)))
        .sum()
}

/// Selects report texts for the prompt in rank order within `budget` tokens.
///
/// Full texts are admitted while they fit. If the top report alone does not
/// fit it is cut to the budget and nothing else is included. Otherwise the
/// budget left after the full texts is split equally among the following
/// reports, each cut to its share, dropping the lowest-ranked ones until
/// every share is at least `min_share` tokens.
pub fn assemble_context<'a>(
    hits: &[RankedHit],
    report_text: impl Fn(&str) -> Option<&'a str>,
    budget: usize,
    min_share: usize,
    estimator: &dyn TokenEstimator,
) -> Result<Vec<ContextEntry>> {
    if budget < MIN_CONTEXT_BUDGET {
        return Err(Error::InvalidConfig(format!("context budget must be at least {MIN_CONTEXT_BUDGET}, got {budget}")));
    }
    let candidates: Vec<(&str, &str)> =
        hits.iter().filter_map(|h| report_text(&h.report_id).map(|t| (h.report_id.as_str(), t))).collect();

    let mut entries = Vec::new();
    let mut used = 0;
    for &(id, text) in &candidates {
        let cost = estimator.estimate(&render_entry(entries.len() + 1, id, text));
        if used + cost > budget {
            break;
        }
        used += cost;
        entries.push(ContextEntry { report_id: id.to_string(), text: text.to_string(), truncated: false });
    }

    if entries.is_empty() {
        let Some(&(id, text)) = candidates.first() else { return Ok(entries) };
        let entry = fit_entry(1, id, text, budget, estimator)
            .ok_or(Error::BudgetExhausted { needed: estimator.estimate(&render_entry(1, id, TRUNCATION_MARK)), budget })?;
        return Ok(vec![entry]);
    }

    let rest = &candidates[entries.len()..];
    let leftover = budget - used;
    let mut n = rest.len();
    while n > 0 && leftover / n < min_share.max(1) {
        n -= 1;
    }
    if let Some(share) = leftover.checked_div(n) {
        for &(id, text) in &rest[..n] {
            if let Some(e) = fit_entry(entries.len() + 1, id, text, share, estimator) {
                entries.push(e);
            }
        }
    }
    Ok(entries)
}

// Longest head of `text` whose rendered entry fits `share` tokens.
fn fit_entry(position: usize, id: &str, text: &str, share: usize, est: &dyn TokenEstimator) -> Option<ContextEntry> {
    if est.estimate(&render_entry(position, id, text)) <= share {
        return Some(ContextEntry { report_id: id.to_string(), text: text.to_string(), truncated: false });
    }
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain([text.len()]).collect();
    let cost = |n: usize| est.estimate(&render_entry(position, id, &format!("{}{TRUNCATION_MARK}", &text[..bounds[n]])));
    if cost(0) > share {
        return None;
    }
    let (mut lo, mut hi) = (0, bounds.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if cost(mid) <= share {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(ContextEntry {
        report_id: id.to_string(),
        text: format!("{}{TRUNCATION_MARK}", &text[..bounds[lo]]),
        truncated: true,
    })
}
