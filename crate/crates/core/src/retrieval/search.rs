use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fusion::{fuse, gather_components, FusionWeights, RankedHit};
use crate::embed::{embed_items, embed_query, Encoder, EncoderConfig, VectorKind};
use crate::error::{Error, Result};
use crate::index::{tokenize, Backend, Bm25Index, Bm25Params, DenseIndex, DenseKind, Persist, ScoredId};
use crate::ingest::{read_corpus, Chunk, ReportDoc};

pub const DEFAULT_K_BACKEND: usize = 200;
pub const SNIPPET_CHARS: usize = 200;

pub const DOC_INDEX_FILE: &str = "docs.dvec";
pub const CHUNK_INDEX_FILE: &str = "chunks.dvec";
pub const BM25_INDEX_FILE: &str = "lexical.bm25";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub query_text: String,
    pub k_final: usize,
    pub k_backend: usize,
    pub weights: FusionWeights,
}

impl SearchRequest {
    pub fn new(query_text: impl Into<String>, k_final: usize) -> Self {
        SearchRequest {
            query_text: query_text.into(),
            k_final,
            k_backend: DEFAULT_K_BACKEND.max(k_final),
            weights: FusionWeights::default(),
        }
    }

    pub fn with_weights(mut self, weights: FusionWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_k_backend(mut self, k_backend: usize) -> Self {
        self.k_backend = k_backend;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_final < 1 || self.k_backend < self.k_final {
            return Err(Error::InvalidConfig(format!(
                "search needs 1 <= k_final <= k_backend, got k_final={} k_backend={}",
                self.k_final, self.k_backend
            )));
        }
        if self.query_text.trim().is_empty() {
            return Err(Error::EmptyInput("query text".into()));
        }
        self.weights.validate()
    }
}

/// Parsed reports and their chunks, addressable by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<ReportDoc>,
    chunks: Vec<Chunk>,
    doc_pos: HashMap<String, usize>,
    chunk_pos: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<ReportDoc>, chunks: Vec<Chunk>) -> Result<Self> {
        let mut doc_pos = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if doc_pos.insert(d.report_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(d.report_id.clone()));
            }
        }
        let mut chunk_pos = HashMap::with_capacity(chunks.len());
        for (i, c) in chunks.iter().enumerate() {
            if !doc_pos.contains_key(&c.report_id) {
                return Err(Error::Integrity(format!("chunk {} references unknown report {}", c.chunk_id, c.report_id)));
            }
            if chunk_pos.insert(c.chunk_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(c.chunk_id.clone()));
            }
        }
        Ok(Corpus { docs, chunks, doc_pos, chunk_pos })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (docs, chunks) = read_corpus(dir)?;
        Corpus::new(docs, chunks)
    }

    pub fn docs(&self) -> &[ReportDoc] {
        &self.docs
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, report_id: &str) -> Option<&ReportDoc> {
        self.doc_pos.get(report_id).map(|&i| &self.docs[i])
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.chunk_pos.get(chunk_id).map(|&i| &self.chunks[i])
    }
}

/// Options for building the indices from a corpus.
#[derive(Debug, Clone, Default)]
pub struct IndexBuildConfig {
    pub encoder: EncoderConfig,
    pub bm25: Bm25Params,
}

/// The doc-dense, chunk-dense and BM25 backends of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    pub doc: DenseIndex,
    pub chunk: DenseIndex,
    pub lexical: Bm25Index,
}

impl IndexSet {
    /// Embeds one vector per report (its text head, capped at the encoder's
    /// input limit) and one per chunk, and indexes the report texts for BM25.
    pub fn build(corpus: &Corpus, encoder: &dyn Encoder, cfg: &IndexBuildConfig) -> Result<Self> {
        let doc_items: Vec<(String, String)> =
            corpus.docs().iter().map(|d| (d.report_id.clone(), d.clean_text.clone())).collect();
        let chunk_items: Vec<(String, String)> =
            corpus.chunks().iter().map(|c| (c.chunk_id.clone(), c.text.clone())).collect();
        let doc_vecs = embed_items(encoder, &cfg.encoder, VectorKind::Doc, &doc_items, None)?;
        let dim = doc_vecs.first().map(|v| v.dim());
        let chunk_vecs = embed_items(encoder, &cfg.encoder, VectorKind::Chunk, &chunk_items, dim)?;
        Ok(IndexSet {
            doc: DenseIndex::build(&doc_vecs, DenseKind::Doc)?,
            chunk: DenseIndex::build(&chunk_vecs, DenseKind::Chunk)?,
            lexical: Bm25Index::build(&doc_items, cfg.bm25)?,
        })
    }

    pub fn backends(&self) -> [Backend; 3] {
        Backend::ALL
    }

    pub fn dim(&self) -> Option<usize> {
        [self.doc.dim(), self.chunk.dim()].into_iter().find(|&d| d > 0)
    }

    /// Writes the three index files (plus digests) into `dir`; returns
    /// file name to digest.
    pub fn persist(&self, dir: &Path) -> Result<Vec<(String, String)>> {
        Ok(vec![
            (DOC_INDEX_FILE.to_string(), self.doc.persist(&dir.join(DOC_INDEX_FILE))?),
            (CHUNK_INDEX_FILE.to_string(), self.chunk.persist(&dir.join(CHUNK_INDEX_FILE))?),
            (BM25_INDEX_FILE.to_string(), self.lexical.persist(&dir.join(BM25_INDEX_FILE))?),
        ])
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(IndexSet {
            doc: DenseIndex::load(&dir.join(DOC_INDEX_FILE))?,
            chunk: DenseIndex::load(&dir.join(CHUNK_INDEX_FILE))?,
            lexical: Bm25Index::load(&dir.join(BM25_INDEX_FILE))?,
        })
    }
}

/// Raw per-backend top-k lists for one query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackendHits {
    pub doc: Vec<ScoredId>,
    pub chunk: Vec<ScoredId>,
    pub bm25: Vec<ScoredId>,
}

/// Query-time retrieval over an immutable corpus and its indices.
#[derive(Debug, Clone)]
pub struct Engine {
    corpus: Arc<Corpus>,
    indices: Arc<IndexSet>,
    encoder: Arc<dyn Encoder>,
    encoder_cfg: EncoderConfig,
}

impl Engine {
    pub fn new(corpus: Arc<Corpus>, indices: Arc<IndexSet>, encoder: Arc<dyn Encoder>, encoder_cfg: EncoderConfig) -> Result<Self> {
        if let Some(id) = indices.doc.owners().iter().chain(indices.lexical.doc_ids()).find(|id| corpus.doc(id).is_none()) {
            return Err(Error::Integrity(format!("index refers to report {id} missing from the corpus")));
        }
        if let Some(id) = indices.chunk.ids().iter().find(|id| corpus.chunk(id).is_none()) {
            return Err(Error::Integrity(format!("index refers to chunk {id} missing from the corpus")));
        }
        if indices.doc.dim() > 0 && indices.chunk.dim() > 0 && indices.doc.dim() != indices.chunk.dim() {
            return Err(Error::DimensionMismatch { expected: indices.doc.dim(), actual: indices.chunk.dim() });
        }
        Ok(Engine { corpus, indices, encoder, encoder_cfg })
    }

    /// Builds indices in memory for `corpus`.
    pub fn build(corpus: Corpus, encoder: Arc<dyn Encoder>, cfg: IndexBuildConfig) -> Result<Self> {
        let indices = IndexSet::build(&corpus, encoder.as_ref(), &cfg)?;
        Engine::new(Arc::new(corpus), Arc::new(indices), encoder, cfg.encoder)
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn indices(&self) -> &Arc<IndexSet> {
        &self.indices
    }

    pub fn encoder(&self) -> &Arc<dyn Encoder> {
        &self.encoder
    }

    pub fn encode_query(&self, query: &str) -> Result<Vec<f32>> {
        embed_query(self.encoder.as_ref(), &self.encoder_cfg, query, self.indices.dim())
    }

    /// Runs all three backends at depth `k` for an already-encoded query.
    pub fn backend_hits(&self, query_vec: &[f32], query_text: &str, k: usize) -> Result<BackendHits> {
        let tokens = tokenize(query_text);
        let ((doc, chunk), bm25) = rayon::join(
            || rayon::join(|| self.indices.doc.topk(query_vec, k), || self.indices.chunk.topk(query_vec, k)),
            || self.indices.lexical.topk(&tokens, k),
        );
        Ok(BackendHits { doc: doc?, chunk: chunk?, bm25: bm25? })
    }

    pub fn search(&self, req: &SearchRequest) -> Result<Vec<RankedHit>> {
        req.validate()?;
        if self.corpus.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.encode_query(&req.query_text)?;
        let hits = self.backend_hits(&q, &req.query_text, req.k_backend)?;
        let mut ranked = fuse(gather_components(&hits.doc, &hits.chunk, &hits.bm25), &req.weights)?;
        ranked.truncate(req.k_final);
        for hit in &mut ranked {
            self.decorate(hit);
        }
        Ok(ranked)
    }

    fn decorate(&self, hit: &mut RankedHit) {
        let best = hit.best_chunk_id.as_deref().and_then(|id| self.corpus.chunk(id));
        hit.best_chunk_section = best.map(|c| c.section_label);
        let source = match best {
            Some(c) => c.text.as_str(),
            None => self.corpus.doc(&hit.report_id).map_or("", |d| d.clean_text.as_str()),
        };
        hit.snippet = source.chars().take(SNIPPET_CHARS).collect();
    }
}
