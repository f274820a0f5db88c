//! The three retrieval backends: exact dense doc index, exact dense chunk
//! index and BM25.

mod bm25;
mod dense;
mod persist;

use serde::{Deserialize, Serialize};

pub use bm25::{bm25_topk, tokenize, Bm25Index, Bm25Params};
pub use dense::{dense_topk, owner_of, DenseIndex, DenseKind, INDEX_NORM_TOLERANCE};
pub use persist::{digest_path, load_index, persist_index, Persist};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredId {
    pub id: String,
    pub score: f64,
    /// Report the scored item belongs to.
    pub owner: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    DocDense,
    ChunkDense,
    Bm25,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::DocDense, Backend::ChunkDense, Backend::Bm25];
}
