use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the target report of one query was retrieved; `None` is a miss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    pub query_id: String,
    pub target_report_id: String,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankLog {
    pub entries: Vec<RankEntry>,
}

impl RankLog {
    pub fn new(entries: Vec<RankEntry>) -> Result<Self> {
        let log = RankLog { entries };
        log.validate()?;
        Ok(log)
    }

    /// Anonymous log from bare ranks, e.g. for replaying published fractions.
    pub fn from_ranks(ranks: &[Option<usize>]) -> Result<Self> {
        RankLog::new(
            ranks
                .iter()
                .enumerate()
                .map(|(i, &rank)| RankEntry { query_id: format!("q{i}"), target_report_id: format!("t{i}"), rank })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.rank == Some(0) {
                return Err(Error::InvalidInput(format!("query {} has rank 0; ranks start at 1", e.query_id)));
            }
            if !seen.insert(e.query_id.as_str()) {
                return Err(Error::InvalidInput(format!("query {} appears twice in the rank log", e.query_id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn nonempty(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptyInput("rank log".into()));
        }
        Ok(())
    }
}

/// Number of entries retrieved at rank `k` or better.
pub fn hits_at_k(log: &RankLog, k: usize) -> usize {
    log.entries.iter().filter(|e| e.rank.is_some_and(|r| r <= k)).count()
}

pub fn recall_at_k(log: &RankLog, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    log.nonempty()?;
    Ok(hits_at_k(log, k) as f64 / log.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub mrr: f64,
    pub ndcg: f64,
}

/// MRR@K and nDCG@K with one relevant report per query, so the ideal DCG
/// is 1 and a hit at rank r contributes `1 / log2(r + 1)`.
pub fn rank_metrics(log: &RankLog, cutoff: usize) -> Result<RankMetrics> {
    if cutoff < 1 {
        return Err(Error::InvalidInput("cutoff must be at least 1".into()));
    }
    log.nonempty()?;
    let (mut rr, mut dcg) = (0.0, 0.0);
    for r in log.entries.iter().filter_map(|e| e.rank).filter(|&r| r <= cutoff) {
        rr += 1.0 / r as f64;
        dcg += 1.0 / ((r + 1) as f64).log2();
    }
    let n = log.len() as f64;
    Ok(RankMetrics { mrr: rr / n, ndcg: dcg / n })
}
