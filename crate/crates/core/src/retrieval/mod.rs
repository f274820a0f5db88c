//! Hybrid retrieval: three backends fused per report with a convex
//! combination of doc-dense, chunk-dense and normalized BM25 scores.

mod fusion;
mod search;

pub use fusion::{
    compute_s_chunk, compute_s_doc, fuse, gather_components, normalize_bm25, Components, FusionWeights, RankedHit,
    WEIGHT_SUM_TOLERANCE,
};
pub use search::{
    BackendHits, Corpus, Engine, IndexBuildConfig, IndexSet, SearchRequest, BM25_INDEX_FILE, CHUNK_INDEX_FILE,
    DEFAULT_K_BACKEND, DOC_INDEX_FILE, SNIPPET_CHARS,
};
