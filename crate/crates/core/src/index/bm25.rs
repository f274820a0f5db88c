//! Okapi BM25 over whole reports.
//!
//! `score(d) = Σ_t idf(t) · tf / (tf + k1 · (1 − b + b · len(d) / avglen))`
//! with `idf(t) = ln(1 + (N − df + 0.5) / (df + 0.5))`. The `+1` inside the
//! log keeps every term contribution positive, so any document sharing a
//! term with the query scores above zero.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ScoredId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

/// Lowercases, splits on whitespace and strips punctuation from token edges.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    doc_ids: Vec<String>,
    /// term -> (doc ordinal, term frequency), sorted by ordinal
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    params: Bm25Params,
}

impl Bm25Index {
    /// Indexes `(report_id, text)` pairs with [`tokenize`].
    pub fn build(docs: &[(String, String)], params: Bm25Params) -> Result<Self> {
        let tokenized: Vec<(String, Vec<String>)> =
            docs.iter().map(|(id, text)| (id.clone(), tokenize(text))).collect();
        Bm25Index::build_from_tokens(&tokenized, params)
    }

    pub fn build_from_tokens(docs: &[(String, Vec<String>)], params: Bm25Params) -> Result<Self> {
        if !(params.k1 >= 0.0 && (0.0..=1.0).contains(&params.b)) {
            return Err(Error::InvalidConfig(format!("BM25 needs k1 >= 0 and b in [0, 1], got {params:?}")));
        }
        let mut seen = HashSet::new();
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (ord, (id, tokens)) in docs.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term.to_string()).or_default().push((ord as u32, count));
            }
            doc_lengths.push(tokens.len() as u32);
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = if docs.is_empty() { 0.0 } else { total as f64 / docs.len() as f64 };
        Ok(Bm25Index {
            doc_ids: docs.iter().map(|(id, _)| id.clone()).collect(),
            postings,
            doc_lengths,
            avg_doc_length,
            params,
        })
    }

    pub(crate) fn from_parts(
        doc_ids: Vec<String>,
        postings: BTreeMap<String, Vec<(u32, u32)>>,
        doc_lengths: Vec<u32>,
        params: Bm25Params,
    ) -> Self {
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = if doc_ids.is_empty() { 0.0 } else { total as f64 / doc_ids.len() as f64 };
        Bm25Index { doc_ids, postings, doc_lengths, avg_doc_length, params }
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub(crate) fn postings(&self) -> &BTreeMap<String, Vec<(u32, u32)>> {
        &self.postings
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Raw scores of every document sharing at least one term with the
    /// query, keyed by document ordinal. Repeated query tokens count once
    /// per occurrence.
    pub fn score_all(&self, query_tokens: &[String]) -> HashMap<usize, f64> {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        if self.avg_doc_length <= 0.0 {
            return acc;
        }
        let Bm25Params { k1, b } = self.params;
        for term in query_tokens {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for &(ord, tf) in list {
                let tf = f64::from(tf);
                let len = f64::from(self.doc_lengths[ord as usize]);
                let norm = k1 * (1.0 - b + b * len / self.avg_doc_length);
                *acc.entry(ord as usize).or_default() += idf * tf / (tf + norm);
            }
        }
        acc
    }

    /// Top-k raw scores, descending, ties to the smaller report id.
    pub fn topk(&self, query_tokens: &[String], k: usize) -> Result<Vec<ScoredId>> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        let mut scored: Vec<(usize, f64)> = self.score_all(query_tokens).into_iter().collect();
        scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| self.doc_ids[a.0].cmp(&self.doc_ids[b.0])));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(ord, score)| ScoredId {
                id: self.doc_ids[ord].clone(),
                score,
                owner: self.doc_ids[ord].clone(),
            })
            .collect())
    }
}

pub fn bm25_topk(index: &Bm25Index, query_tokens: &[String], k: usize) -> Result<Vec<ScoredId>> {
    index.topk(query_tokens, k)
}
