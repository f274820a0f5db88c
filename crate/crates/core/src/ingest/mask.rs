use std::collections::HashMap;

use regex::Regex;

use super::sections::{Section, SectionLabel};
use super::sentences::SentenceSplitter;
use super::ReportDoc;
use crate::error::{Error, Result};

pub const DEFAULT_MARKER_LEXICON: &str = include_str!("../../data/ihc_markers.txt");
pub const REDACTED: &str = "[REDACTED]";

/// Immunohistochemistry marker vocabulary with aliases.
///
/// Matching is case-insensitive on whole tokens: a hit must not be preceded
/// or followed by an ASCII letter or digit.
#[derive(Debug, Clone)]
pub struct MarkerLexicon {
    canonical: Vec<String>,
    by_alias: HashMap<String, usize>,
    pattern: Regex,
}

impl Default for MarkerLexicon {
    fn default() -> Self {
        MarkerLexicon::parse(DEFAULT_MARKER_LEXICON).expect("shipped lexicon")
    }
}

impl MarkerLexicon {
    /// Parses `canonical|alias|alias` lines; blank lines and `#` comments are skipped.
    pub fn parse(list: &str) -> Result<Self> {
        let mut canonical = Vec::new();
        let mut by_alias = HashMap::new();
        for line in list.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let idx = canonical.len();
            let mut names = line.split('|').map(str::trim).filter(|n| !n.is_empty());
            let Some(name) = names.next() else { continue };
            canonical.push(name.to_string());
            for alias in std::iter::once(name).chain(names) {
                by_alias.entry(alias.to_lowercase()).or_insert(idx);
            }
        }
        if canonical.is_empty() {
            return Err(Error::InvalidConfig("marker lexicon is empty".into()));
        }
        let mut aliases: Vec<&String> = by_alias.keys().collect();
        // longest first so "HER2/neu" wins over "HER2"
        aliases.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let alternation = aliases.iter().map(|a| regex::escape(a)).collect::<Vec<_>>().join("|");
        let pattern = Regex::new(&format!(r"(?i)(?:^|[^A-Za-z0-9])({alternation})(?:$|[^A-Za-z0-9])"))
            .map_err(|e| Error::InvalidConfig(format!("marker lexicon pattern: {e}")))?;
        Ok(MarkerLexicon { canonical, by_alias, pattern })
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.canonical
    }

    /// Canonical spelling for a marker name or alias.
    pub fn canonical_name(&self, name: &str) -> Option<&str> {
        self.by_alias.get(&name.trim().to_lowercase()).map(|&i| self.canonical[i].as_str())
    }

    pub fn contains_marker(&self, text: &str) -> bool {
        !self.find_markers(text).is_empty()
    }

    /// Canonical names of all markers mentioned in `text`, in order of first mention.
    pub fn find_markers(&self, text: &str) -> Vec<String> {
        let mut found: Vec<String> = Vec::new();
        let mut at = 0;
        // Matches consume one delimiter on each side; restart just before the
        // trailing delimiter so adjacent markers ("CK7 CK20") are both seen.
        while let Some(caps) = self.pattern.captures_at(text, at) {
            let m = caps.get(1).expect("group");
            if let Some(name) = self.canonical_name(m.as_str()) {
                if !found.iter().any(|f| f == name) {
                    found.push(name.to_string());
                }
            }
            at = m.end();
            if at >= text.len() {
                break;
            }
        }
        found
    }
}

/// Copy of `doc` with immunohistochemistry content removed: the
/// immunohistochemistry section body becomes [`REDACTED`], and in every other
/// section each sentence that names a lexicon marker is replaced by
/// [`REDACTED`]. Line structure is kept.
pub fn mask_ihc(doc: &ReportDoc, lexicon: &MarkerLexicon) -> ReportDoc {
    let splitter = SentenceSplitter::default();
    let mut clean = String::with_capacity(doc.clean_text.len());
    let mut sections = Vec::with_capacity(doc.sections.len());
    let mut cursor = 0;
    for section in &doc.sections {
        let (start, end) = section.char_span;
        clean.push_str(&doc.clean_text[cursor..start]);
        let text = if section.label == SectionLabel::Immunohistochemistry && !section.text.is_empty() {
            REDACTED.to_string()
        } else {
            redact_sentences(&section.text, lexicon, &splitter)
        };
        let s = clean.len();
        clean.push_str(&text);
        sections.push(Section { label: section.label, text, char_span: (s, clean.len()) });
        cursor = end;
    }
    clean.push_str(&doc.clean_text[cursor..]);
    ReportDoc {
        report_id: doc.report_id.clone(),
        clean_text: clean,
        sections,
        source_path: doc.source_path.clone(),
        wsi_id: doc.wsi_id.clone(),
    }
}

fn redact_sentences(text: &str, lexicon: &MarkerLexicon, splitter: &SentenceSplitter) -> String {
    if !lexicon.contains_marker(text) {
        return text.to_string();
    }
    text.split('\n')
        .map(|line| {
            let mut out = String::with_capacity(line.len());
            let mut cursor = 0;
            for span in splitter.spans(line) {
                out.push_str(&line[cursor..span.start]);
                let sentence = &line[span.clone()];
                out.push_str(if lexicon.contains_marker(sentence) { REDACTED } else { sentence });
                cursor = span.end;
            }
            out.push_str(&line[cursor..]);
            out
        })
        .collect::<Vec<_>>()
        .join("\n")
}
