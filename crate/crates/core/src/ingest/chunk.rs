use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sections::SectionLabel;
use super::sentences::SentenceSplitter;
use super::ReportDoc;
use crate::error::{Error, Result};
use crate::tokens::{CharRatioEstimator, TokenEstimator};

pub const DEFAULT_MIN_TOKENS: usize = 40;
pub const DEFAULT_MAX_TOKENS: usize = 380;

/// Marks a chunk whose size falls outside `[min_tokens, max_tokens]` for a
/// reason the packer could not avoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkFlag {
    /// A single sentence longer than `max_tokens`.
    Oversized,
    /// A remainder below `min_tokens` that fits no neighbor.
    Undersized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub report_id: String,
    pub section_label: SectionLabel,
    pub text: String,
    pub summary: String,
    pub token_estimate: usize,
    /// Byte range of `text` inside the report's `clean_text`.
    pub char_span: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<ChunkFlag>,
}

impl Chunk {
    pub fn ordinal(&self) -> Option<usize> {
        self.chunk_id.rsplit_once('#').and_then(|(_, n)| n.parse().ok())
    }
}

pub fn chunk_id(report_id: &str, ordinal: usize) -> String {
    format!("{report_id}#{ordinal}")
}

/// Greedy section-bounded sentence packer.
#[derive(Debug, Clone)]
pub struct Chunker {
    splitter: SentenceSplitter,
    estimator: Arc<dyn TokenEstimator>,
    min_tokens: usize,
    max_tokens: usize,
}

#[derive(Debug, Clone)]
struct Group {
    sentences: Range<usize>,
    flag: Option<ChunkFlag>,
}

impl Chunker {
    pub fn new(min_tokens: usize, max_tokens: usize) -> Result<Self> {
        if min_tokens < 1 || min_tokens >= max_tokens {
            return Err(Error::InvalidConfig(format!(
                "chunk thresholds need 1 <= min_tokens < max_tokens, got {min_tokens} and {max_tokens}"
            )));
        }
        Ok(Chunker {
            splitter: SentenceSplitter::default(),
            estimator: Arc::new(CharRatioEstimator::default()),
            min_tokens,
            max_tokens,
        })
    }

    pub fn with_splitter(mut self, splitter: SentenceSplitter) -> Self {
        self.splitter = splitter;
        self
    }

    pub fn with_estimator(mut self, estimator: Arc<dyn TokenEstimator>) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn min_tokens(&self) -> usize {
        self.min_tokens
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn chunk(&self, doc: &ReportDoc) -> Vec<Chunk> {
        let mut out = Vec::new();
        for section in &doc.sections {
            let text = section.text.as_str();
            let spans = self.splitter.spans(text);
            if spans.is_empty() {
                continue;
            }
            let slice = |r: &Range<usize>| &text[spans[r.start].start..spans[r.end - 1].end];
            let est = |r: &Range<usize>| self.estimator.estimate(slice(r));

            let mut groups = self.pack(spans.len(), &est);
            self.rebalance(&mut groups, &est);

            for g in groups {
                let body = slice(&g.sentences);
                let head = g.sentences.start..(g.sentences.start + 3).min(g.sentences.end);
                let offset = section.char_span.0 + spans[g.sentences.start].start;
                out.push(Chunk {
                    chunk_id: chunk_id(&doc.report_id, out.len()),
                    report_id: doc.report_id.clone(),
                    section_label: section.label,
                    text: body.to_string(),
                    summary: slice(&head).to_string(),
                    token_estimate: est(&g.sentences).max(1),
                    char_span: (offset, offset + body.len()),
                    flag: g.flag,
                });
            }
        }
        out
    }

    fn pack(&self, n: usize, est: &dyn Fn(&Range<usize>) -> usize) -> Vec<Group> {
        let mut groups = Vec::new();
        let mut open: Option<usize> = None;
        for i in 0..n {
            if est(&(i..i + 1)) > self.max_tokens {
                if let Some(s) = open.take() {
                    groups.push(Group { sentences: s..i, flag: None });
                }
                groups.push(Group { sentences: i..i + 1, flag: Some(ChunkFlag::Oversized) });
                continue;
            }
            match open {
                None => open = Some(i),
                Some(s) if est(&(s..i + 1)) > self.max_tokens => {
                    groups.push(Group { sentences: s..i, flag: None });
                    open = Some(i);
                }
                Some(_) => {}
            }
        }
        if let Some(s) = open {
            groups.push(Group { sentences: s..n, flag: None });
        }
        groups
    }

    // Folds groups below min_tokens into a neighbor, or shifts boundary
    // sentences from a neighbor, whenever that keeps every group inside the
    // thresholds. What remains gets the Undersized flag.
    fn rebalance(&self, groups: &mut Vec<Group>, est: &dyn Fn(&Range<usize>) -> usize) {
        let (min, max) = (self.min_tokens, self.max_tokens);
        let packable = |g: &Group| g.flag.is_none();
        while let Some(j) = groups.iter().position(|g| packable(g) && est(&g.sentences) < min) {
            let cur = groups[j].sentences.clone();
            if j > 0 && packable(&groups[j - 1]) && est(&(groups[j - 1].sentences.start..cur.end)) <= max {
                groups[j - 1].sentences.end = cur.end;
                groups.remove(j);
                continue;
            }
            if j + 1 < groups.len()
                && packable(&groups[j + 1])
                && est(&(cur.start..groups[j + 1].sentences.end)) <= max
            {
                groups[j + 1].sentences.start = cur.start;
                groups.remove(j);
                continue;
            }
            if j > 0 && packable(&groups[j - 1]) {
                let prev = groups[j - 1].sentences.clone();
                if let Some(split) = (prev.start + 1..prev.end).rev().find(|&split| {
                    let (p, g) = (prev.start..split, split..cur.end);
                    est(&p) >= min && est(&g) <= max && est(&g) >= min
                }) {
                    groups[j - 1].sentences.end = split;
                    groups[j].sentences.start = split;
                    continue;
                }
            }
            if j + 1 < groups.len() && packable(&groups[j + 1]) {
                let next = groups[j + 1].sentences.clone();
                if let Some(split) = (next.start + 1..next.end).find(|&split| {
                    let (g, n) = (cur.start..split, split..next.end);
                    est(&n) >= min && est(&g) <= max && est(&g) >= min
                }) {
                    groups[j].sentences.end = split;
                    groups[j + 1].sentences.start = split;
                    continue;
                }
            }
            groups[j].flag = Some(ChunkFlag::Undersized);
        }
    }
}

/// Chunks `doc` with the default splitter and estimator.
pub fn build_chunks(doc: &ReportDoc, min_tokens: usize, max_tokens: usize) -> Result<Vec<Chunk>> {
    Ok(Chunker::new(min_tokens, max_tokens)?.chunk(doc))
}
