use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScoredId;
use crate::embed::{dot, EmbeddingVector};
use crate::error::{Error, Result};

pub const INDEX_NORM_TOLERANCE: f64 = 1e-5;

// Below this many rows a sequential scan beats the rayon fan-out.
const PAR_SCAN_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseKind {
    Doc,
    Chunk,
}

impl DenseKind {
    pub(crate) fn code(self) -> u8 {
        match self {
            DenseKind::Doc => 0,
            DenseKind::Chunk => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DenseKind::Doc),
            1 => Some(DenseKind::Chunk),
            _ => None,
        }
    }
}

/// Owner report of a vector id: the part before the last `#`, or the whole id.
pub fn owner_of(id: &str) -> &str {
    id.rsplit_once('#').map_or(id, |(owner, _)| owner)
}

/// Exact inner-product index over unit-norm rows stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    kind: DenseKind,
    dim: usize,
    data: Vec<f32>,
    ids: Vec<String>,
    owners: Vec<String>,
}

impl DenseIndex {
    pub fn empty(kind: DenseKind, dim: usize) -> Self {
        DenseIndex { kind, dim, data: Vec::new(), ids: Vec::new(), owners: Vec::new() }
    }

    /// Builds the index in insertion order; owners come from [`owner_of`].
    pub fn build(vectors: &[EmbeddingVector], kind: DenseKind) -> Result<Self> {
        let dim = vectors.first().map_or(0, EmbeddingVector::dim);
        let mut index = DenseIndex::empty(kind, dim);
        let mut seen = HashSet::with_capacity(vectors.len());
        index.data.reserve(dim * vectors.len());
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: v.dim() });
            }
            if !seen.insert(v.id.as_str()) {
                return Err(Error::DuplicateId(v.id.clone()));
            }
            let norm = v.norm();
            if (norm - 1.0).abs() > INDEX_NORM_TOLERANCE {
                return Err(Error::NotUnitNorm { id: v.id.clone(), norm });
            }
            index.data.extend_from_slice(&v.values);
            index.ids.push(v.id.clone());
            index.owners.push(owner_of(&v.id).to_string());
        }
        Ok(index)
    }

    pub(crate) fn from_parts(kind: DenseKind, dim: usize, data: Vec<f32>, ids: Vec<String>, owners: Vec<String>) -> Self {
        DenseIndex { kind, dim, data, ids, owners }
    }

    pub fn kind(&self) -> DenseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn owners(&self) -> &[String] {
        &self.owners
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn data(&self) -> &[f32] {
        &self.data
    }

    /// Exact top-k by inner product; ties go to the smaller id.
    pub fn topk(&self, query: &[f32], k: usize) -> Result<Vec<ScoredId>> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: query.len() });
        }
        let score_row = |(i, row): (usize, &[f32])| (i, dot(query, row));
        let mut scored: Vec<(usize, f64)> = if self.len() >= PAR_SCAN_ROWS {
            self.data.par_chunks_exact(self.dim).enumerate().map(score_row).collect()
        } else {
            self.data.chunks_exact(self.dim).enumerate().map(score_row).collect()
        };
        let order = |a: &(usize, f64), b: &(usize, f64)| -> Ordering {
            b.1.total_cmp(&a.1).then_with(|| self.ids[a.0].cmp(&self.ids[b.0]))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(i, score)| ScoredId { id: self.ids[i].clone(), score, owner: self.owners[i].clone() })
            .collect())
    }
}

/// Free-function form of [`DenseIndex::topk`].
pub fn dense_topk(index: &DenseIndex, query: &[f32], k: usize) -> Result<Vec<ScoredId>> {
    index.topk(query, k)
}
