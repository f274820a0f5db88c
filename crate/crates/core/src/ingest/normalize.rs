use std::sync::LazyLock;

use regex::Regex;

use super::sections::match_heading;
use crate::error::{Error, Result};

pub const DEFAULT_PAGE_MARKER: &str = r"^=== PAGE \d+ ===$";

static HYPHEN_BREAK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(\p{L})-[ \t]*\n[ \t]*(\p{Ll})").expect("hyphen pattern"));
static PARAGRAPH_BREAK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\n[ \t\u{a0}]*(?:\n[ \t\u{a0}]*)+").expect("paragraph pattern"));
static BLANKS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[ \t\u{a0}\u{c}\u{b}]+").expect("blank pattern"));

/// Post-OCR text cleanup.
///
/// Removes page-marker lines, rejoins words hyphenated across a line break,
/// collapses soft line breaks inside paragraphs and squeezes blank runs.
/// Blank-line paragraph breaks survive as `"\n\n"`. Lines that carry a
/// report heading keep their own line so the section grammar still sees them
/// at a line start.
#[derive(Debug, Clone)]
pub struct Normalizer {
    page_marker: Regex,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::new(DEFAULT_PAGE_MARKER).expect("default page marker")
    }
}

impl Normalizer {
    pub fn new(page_marker: &str) -> Result<Self> {
        let page_marker = Regex::new(page_marker)
            .map_err(|e| Error::InvalidConfig(format!("page marker pattern: {e}")))?;
        Ok(Normalizer { page_marker })
    }

    pub fn normalize(&self, raw: &str) -> Result<String> {
        if raw.trim().is_empty() {
            return Err(Error::EmptyDocument);
        }
        let unified = raw.replace("\r\n", "\n").replace('\r', "\n");

        let kept: Vec<&str> = unified
            .split('\n')
            .filter(|line| !self.page_marker.is_match(line.trim()))
            .collect();
        let joined = kept.join("\n");
        let dehyphenated = HYPHEN_BREAK.replace_all(&joined, "$1$2");

        let paragraphs: Vec<String> = PARAGRAPH_BREAK
            .split(dehyphenated.trim())
            .map(collapse_paragraph)
            .filter(|p| !p.is_empty())
            .collect();
        let out = paragraphs.join("\n\n");
        if out.is_empty() {
            return Err(Error::EmptyDocument);
        }
        Ok(out)
    }
}

fn collapse_paragraph(paragraph: &str) -> String {
    let mut out = String::with_capacity(paragraph.len());
    let mut prev_bare_heading = false;
    for line in paragraph.split('\n') {
        let line = BLANKS.replace_all(line.trim(), " ");
        if line.is_empty() {
            continue;
        }
        let heading = match_heading(&line);
        if !out.is_empty() {
            out.push(if heading.is_some() || prev_bare_heading { '\n' } else { ' ' });
        }
        out.push_str(&line);
        prev_bare_heading = heading.is_some_and(|h| h.bare);
    }
    out
}

/// Normalizes with the default page-marker pattern.
pub fn normalize_text(raw: &str) -> Result<String> {
    Normalizer::default().normalize(raw)
}
