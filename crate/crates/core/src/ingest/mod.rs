//! Report ingestion: normalization, section parsing, chunking, IHC masking
//! and the JSONL corpus artifacts.

mod chunk;
mod corpus;
mod mask;
mod normalize;
mod sections;
mod sentences;

use serde::{Deserialize, Serialize};

pub use chunk::{build_chunks, Chunk, ChunkFlag, Chunker, DEFAULT_MAX_TOKENS, DEFAULT_MIN_TOKENS};
pub use corpus::{
    emit_corpus, read_corpus, read_raw_reports, CorpusManifest, DocRecord, CHUNKS_FILE, DOCS_FILE, MANIFEST_FILE,
};
pub use mask::{mask_ihc, MarkerLexicon, DEFAULT_MARKER_LEXICON, REDACTED};
pub use normalize::{normalize_text, Normalizer, DEFAULT_PAGE_MARKER};
pub use sections::{match_heading, parse_sections, HeadingMatch, Section, SectionLabel};
pub use sentences::{split_sentences, SentenceSplitter, DEFAULT_ABBREVIATIONS};

use crate::error::{Error, Result};

/// Post-OCR report as it enters the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReport {
    pub report_id: String,
    pub raw_text: String,
    pub source_path: String,
    pub wsi_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub report_id: String,
    pub clean_text: String,
    pub sections: Vec<Section>,
    pub source_path: String,
    pub wsi_id: Option<String>,
}

impl ReportDoc {
    pub fn from_raw(raw: &RawReport, normalizer: &Normalizer) -> Result<Self> {
        if raw.report_id.trim().is_empty() {
            return Err(Error::InvalidInput(format!("report from {} has an empty id", raw.source_path)));
        }
        let clean_text = normalizer.normalize(&raw.raw_text)?;
        Ok(ReportDoc::from_clean(&raw.report_id, clean_text, &raw.source_path, raw.wsi_id.clone()))
    }

    /// Wraps already-normalized text.
    pub fn from_clean(report_id: &str, clean_text: String, source_path: &str, wsi_id: Option<String>) -> Self {
        let sections = parse_sections(&clean_text);
        ReportDoc { report_id: report_id.to_string(), clean_text, sections, source_path: source_path.to_string(), wsi_id }
    }

    pub fn section(&self, label: SectionLabel) -> Option<&Section> {
        self.sections.iter().find(|s| s.label == label)
    }

    pub fn section_labels(&self) -> Vec<SectionLabel> {
        self.sections.iter().map(|s| s.label).collect()
    }
}

/// Normalizes, parses and chunks `raws`, masking IHC content first when a
/// lexicon is given. Chunks are cut from the (possibly masked) documents.
pub fn ingest_reports(
    raws: &[RawReport],
    normalizer: &Normalizer,
    chunker: &Chunker,
    mask: Option<&MarkerLexicon>,
) -> Result<(Vec<ReportDoc>, Vec<Chunk>)> {
    use rayon::prelude::*;
    let docs = raws
        .par_iter()
        .map(|raw| {
            let doc = ReportDoc::from_raw(raw, normalizer)?;
            Ok(match mask {
                Some(lex) => mask_ihc(&doc, lex),
                None => doc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chunks = docs.par_iter().flat_map_iter(|d| chunker.chunk(d)).collect();
    Ok((docs, chunks))
}
