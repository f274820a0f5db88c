use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chunk::Chunk;
use super::sections::SectionLabel;
use super::{RawReport, ReportDoc};
use crate::digest::sha256_hex;
use crate::error::{Error, Result};

pub const DOCS_FILE: &str = "docs.jsonl";
pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One line of `docs.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub report_id: String,
    pub text: String,
    pub source_path: String,
    pub wsi_id: Option<String>,
    pub sections: Vec<SectionLabel>,
}

impl From<&ReportDoc> for DocRecord {
    fn from(doc: &ReportDoc) -> Self {
        DocRecord {
            report_id: doc.report_id.clone(),
            text: doc.clean_text.clone(),
            source_path: doc.source_path.clone(),
            wsi_id: doc.wsi_id.clone(),
            sections: doc.section_labels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub docs: usize,
    pub chunks: usize,
    /// File name to SHA-256 hex digest.
    pub files: BTreeMap<String, String>,
}

/// Writes `docs.jsonl`, `chunks.jsonl` and `manifest.json` into `out_dir`.
pub fn emit_corpus(docs: &[ReportDoc], chunks: &[Chunk], out_dir: &Path) -> Result<CorpusManifest> {
    let known: HashSet<&str> = docs.iter().map(|d| d.report_id.as_str()).collect();
    if known.len() != docs.len() {
        let mut seen = HashSet::new();
        let dup = docs.iter().find(|d| !seen.insert(&d.report_id)).expect("duplicate exists");
        return Err(Error::DuplicateId(dup.report_id.clone()));
    }
    if let Some(c) = chunks.iter().find(|c| !known.contains(c.report_id.as_str())) {
        return Err(Error::Integrity(format!(
            "chunk {} references unknown report {}",
            c.chunk_id, c.report_id
        )));
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = BTreeMap::new();
    files.insert(DOCS_FILE.to_string(), write_jsonl(&out_dir.join(DOCS_FILE), docs.iter().map(DocRecord::from))?);
    files.insert(CHUNKS_FILE.to_string(), write_jsonl(&out_dir.join(CHUNKS_FILE), chunks.iter())?);

    let manifest = CorpusManifest { docs: docs.len(), chunks: chunks.len(), files };
    let path = out_dir.join(MANIFEST_FILE);
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(MANIFEST_FILE, e))?;
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<String> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, &row).map_err(|e| Error::json(path.display().to_string(), e))?;
        buf.push(b'\n');
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&buf))
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| Error::json(format!("{}:{}", path.display(), n + 1), e))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a corpus directory back, checking the manifest digests when a
/// manifest is present and re-deriving sections from the stored text.
pub fn read_corpus(dir: &Path) -> Result<(Vec<ReportDoc>, Vec<Chunk>)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let raw = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: CorpusManifest = serde_json::from_str(&raw).map_err(|e| Error::json(MANIFEST_FILE, e))?;
        for (name, want) in &manifest.files {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if &sha256_hex(&bytes) != want {
                return Err(Error::Integrity(format!("{name} does not match its manifest digest")));
            }
        }
    }

    let records: Vec<DocRecord> = read_jsonl(&dir.join(DOCS_FILE))?;
    let docs = records
        .into_iter()
        .map(|r| {
            let doc = ReportDoc::from_clean(&r.report_id, r.text, &r.source_path, r.wsi_id);
            if doc.section_labels() != r.sections {
                return Err(Error::Integrity(format!(
                    "stored section labels of {} disagree with its text",
                    doc.report_id
                )));
            }
            Ok(doc)
        })
        .collect::<Result<Vec<_>>>()?;
    let chunks_path = dir.join(CHUNKS_FILE);
    let chunks = if chunks_path.exists() { read_jsonl(&chunks_path)? } else { Vec::new() };
    Ok((docs, chunks))
}

/// Loads raw reports from a `.jsonl` file of [`RawReport`] objects, a single
/// text file, or a directory holding either (non-recursive, sorted by name).
/// A text file's report id is its file stem.
pub fn read_raw_reports(path: &Path) -> Result<Vec<RawReport>> {
    let mut reports = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        for p in entries {
            match p.extension().and_then(|e| e.to_str()) {
                Some("jsonl") => reports.extend(read_jsonl::<RawReport>(&p)?),
                Some("txt") => reports.push(read_text_report(&p)?),
                _ => {}
            }
        }
    } else if path.extension().is_some_and(|e| e == "jsonl") {
        reports = read_jsonl(path)?;
    } else {
        reports.push(read_text_report(path)?);
    }

    let mut seen = HashSet::new();
    for r in &reports {
        if r.report_id.trim().is_empty() {
            return Err(Error::InvalidInput(format!("report from {} has an empty id", r.source_path)));
        }
        if !seen.insert(r.report_id.as_str()) {
            return Err(Error::DuplicateId(r.report_id.clone()));
        }
    }
    Ok(reports)
}

fn read_text_report(path: &Path) -> Result<RawReport> {
    let raw_text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidInput(format!("cannot derive a report id from {}", path.display())))?
        .to_string();
    Ok(RawReport { report_id, raw_text, source_path: path.display().to_string(), wsi_id: None })
}
