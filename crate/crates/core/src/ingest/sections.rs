//! Heading grammar and section segmentation.
//!
//! A heading is one of the recognized report headings at the start of a line
//! (leading blanks allowed), matched case-insensitively, followed either by a
//! colon or by the end of the line. Everything after the colon belongs to the
//! section body. Text before the first heading becomes a `body` section.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionLabel {
    FinalDiagnosis,
    Diagnosis,
    MicroscopicDescription,
    GrossDescription,
    Comment,
    Immunohistochemistry,
    Body,
}

impl SectionLabel {
    pub const ALL: [SectionLabel; 7] = [
        SectionLabel::FinalDiagnosis,
        SectionLabel::Diagnosis,
        SectionLabel::MicroscopicDescription,
        SectionLabel::GrossDescription,
        SectionLabel::Comment,
        SectionLabel::Immunohistochemistry,
        SectionLabel::Body,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionLabel::FinalDiagnosis => "final_diagnosis",
            SectionLabel::Diagnosis => "diagnosis",
            SectionLabel::MicroscopicDescription => "microscopic_description",
            SectionLabel::GrossDescription => "gross_description",
            SectionLabel::Comment => "comment",
            SectionLabel::Immunohistochemistry => "immunohistochemistry",
            SectionLabel::Body => "body",
        }
    }

    /// Canonical upper-case heading as it appears in reports.
    pub fn heading(self) -> &'static str {
        match self {
            SectionLabel::FinalDiagnosis => "FINAL DIAGNOSIS",
            SectionLabel::Diagnosis => "DIAGNOSIS",
            SectionLabel::MicroscopicDescription => "MICROSCOPIC DESCRIPTION",
            SectionLabel::GrossDescription => "GROSS DESCRIPTION",
            SectionLabel::Comment => "COMMENT",
            SectionLabel::Immunohistochemistry => "IMMUNOHISTOCHEMISTRY",
            SectionLabel::Body => "",
        }
    }
}

impl fmt::Display for SectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SectionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SectionLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown section label {s:?}"))
    }
}

/// A labeled block of a normalized report. `char_span` holds byte offsets
/// into the report's `clean_text`, and `clean_text[start..end] == text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub label: SectionLabel,
    pub text: String,
    pub char_span: (usize, usize),
}

// Alternation order matters: "final diagnosis" must be tried before "diagnosis".
static HEADING_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^[ \t]*(final[ \t]+diagnosis|microscopic[ \t]+description|gross[ \t]+description|immunohistochemi(?:stry|cal)(?:[ \t]+(?:stains|studies|results))?|diagnosis|comments?)[ \t]*(:|$)",
    )
    .expect("heading pattern")
});

fn label_for(heading: &str) -> SectionLabel {
    let lower = heading.to_ascii_lowercase();
    if lower.starts_with("final") {
        SectionLabel::FinalDiagnosis
    } else if lower.starts_with("microscopic") {
        SectionLabel::MicroscopicDescription
    } else if lower.starts_with("gross") {
        SectionLabel::GrossDescription
    } else if lower.starts_with("immunohisto") {
        SectionLabel::Immunohistochemistry
    } else if lower.starts_with("diagnosis") {
        SectionLabel::Diagnosis
    } else {
        SectionLabel::Comment
    }
}

/// Recognized heading at the start of `line`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadingMatch {
    pub label: SectionLabel,
    /// Byte length of the heading including leading blanks and the colon.
    pub len: usize,
    /// True when nothing but blanks follows the heading on this line.
    pub bare: bool,
}

/// Matches the heading grammar against a single line (no newline inside).
pub fn match_heading(line: &str) -> Option<HeadingMatch> {
    let caps = HEADING_RE.captures(line)?;
    let whole = caps.get(0)?;
    let label = label_for(caps.get(1)?.as_str());
    Some(HeadingMatch {
        label,
        len: whole.end(),
        bare: line[whole.end()..].trim().is_empty(),
    })
}

/// Splits normalized text into labeled sections. Always returns at least one
/// section for non-blank input.
pub fn parse_sections(clean: &str) -> Vec<Section> {
    // (label, heading line start, content start)
    let mut marks: Vec<(SectionLabel, usize, usize)> = Vec::new();
    let mut offset = 0;
    for line in clean.split_inclusive('\n') {
        let body = line.strip_suffix('\n').unwrap_or(line);
        if let Some(m) = match_heading(body) {
            marks.push((m.label, offset, offset + m.len));
        }
        offset += line.len();
    }

    let mut sections = Vec::new();
    let first_heading = marks.first().map_or(clean.len(), |m| m.1);
    if let Some(sec) = trimmed_section(clean, SectionLabel::Body, 0, first_heading) {
        sections.push(sec);
    }
    for (i, &(label, _, content_start)) in marks.iter().enumerate() {
        let end = marks.get(i + 1).map_or(clean.len(), |m| m.1);
        let sec = trimmed_section(clean, label, content_start, end).unwrap_or_else(|| {
            // Heading with no content keeps an empty, zero-width section.
            let at = content_start.min(end);
            Section { label, text: String::new(), char_span: (at, at) }
        });
        sections.push(sec);
    }
    if sections.is_empty() {
        sections.push(Section { label: SectionLabel::Body, text: String::new(), char_span: (0, 0) });
    }
    sections
}

fn trimmed_section(clean: &str, label: SectionLabel, start: usize, end: usize) -> Option<Section> {
    let raw = &clean[start..end];
    let lead = raw.len() - raw.trim_start().len();
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    let s = start + lead;
    Some(Section { label, text: trimmed.to_string(), char_span: (s, s + trimmed.len()) })
}
