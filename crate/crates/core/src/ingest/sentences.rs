use std::collections::HashSet;
use std::ops::Range;

pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

/// Punctuation-based sentence boundary heuristic.
///
/// A boundary follows a run of `.`, `?` or `!` (plus any closing quotes or
/// brackets) when the next non-blank character is an uppercase letter or a
/// digit. A period that ends a listed abbreviation never closes a sentence.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// Builds a splitter from a newline-separated abbreviation list; `#` starts a comment line.
    pub fn from_list(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        SentenceSplitter { abbreviations }
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(&word.to_lowercase())
    }

    /// Byte ranges of the sentences in `text`, each trimmed of surrounding
    /// whitespace. The gaps between consecutive ranges are whitespace only.
    pub fn spans(&self, text: &str) -> Vec<Range<usize>> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut spans = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if !matches!(c, '.' | '?' | '!') {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < chars.len() && matches!(chars[j].1, '.' | '?' | '!') {
                j += 1;
            }
            while j < chars.len() && matches!(chars[j].1, ')' | ']' | '"' | '\'' | '\u{2019}' | '\u{201d}') {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let opens_sentence = k > j
                && chars
                    .get(k)
                    .is_some_and(|&(_, n)| n.is_uppercase() || n.is_ascii_digit());
            if opens_sentence && !(c == '.' && j == i + 1 && self.guards(text, start, pos)) {
                push_trimmed(text, start..end, &mut spans);
                start = chars[k].0;
            }
            i = j.max(i + 1);
        }
        push_trimmed(text, start..text.len(), &mut spans);
        spans
    }

    pub fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        self.spans(text).into_iter().map(|r| &text[r]).collect()
    }

    // Word ending at the period at `period`, including the period.
    fn guards(&self, text: &str, sentence_start: usize, period: usize) -> bool {
        let before = &text[sentence_start..period];
        let word_start = before.rfind(char::is_whitespace).map_or(0, |p| p + 1);
        let word = &text[sentence_start + word_start..=period];
        self.is_abbreviation(word.trim_start_matches(['(', '[', '"', '\'']))
    }
}

fn push_trimmed(text: &str, range: Range<usize>, out: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        let s = range.start + lead;
        out.push(s..s + trimmed.len());
    }
}

/// Splits with the default abbreviation list.
pub fn split_sentences(section_text: &str) -> Vec<String> {
    SentenceSplitter::default().split(section_text).into_iter().map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sentences() {
        assert_eq!(
            split_sentences("Tumor is 3 cm. Margins negative."),
            vec!["Tumor is 3 cm.", "Margins negative."]
        );
    }

    #[test]
    fn no_terminator() {
        assert_eq!(split_sentences("One sentence only"), vec!["One sentence only"]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n ").is_empty());
    }

    #[test]
    fn abbreviation_guard_suppresses_split() {
        assert_eq!(
            split_sentences("Reviewed by Dr. Smith today. Case closed."),
            vec!["Reviewed by Dr. Smith today.", "Case closed."]
        );
        assert_eq!(split_sentences("Compare tumor vs. Normal tissue."), vec!["Compare tumor vs. Normal tissue."]);
    }

    #[test]
    fn lowercase_after_period_does_not_split() {
        assert_eq!(split_sentences("Size 2.5 cm. in total."), vec!["Size 2.5 cm. in total."]);
    }

    #[test]
    fn digit_and_question_and_bang() {
        assert_eq!(
            split_sentences("Is it benign? 3 foci seen! Done"),
            vec!["Is it benign?", "3 foci seen!", "Done"]
        );
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        assert_eq!(split_sentences("He said \"stop.\" Then left."), vec!["He said \"stop.\"", "Then left."]);
    }

    #[test]
    fn decimal_point_not_a_boundary() {
        assert_eq!(split_sentences("Measures 2.5 cm"), vec!["Measures 2.5 cm"]);
    }

    #[test]
    fn custom_list_replaces_default() {
        let s = SentenceSplitter::from_list("# none\ncm.\n");
        assert_eq!(s.split("Tumor is 3 cm. Margins negative."), vec!["Tumor is 3 cm. Margins negative."]);
    }

    #[test]
    fn gaps_between_spans_are_whitespace() {
        let text = "  A first one.  Then B!\nC? d continues. 4 items.";
        let spans = SentenceSplitter::default().spans(text);
        let mut prev = 0;
        for r in &spans {
            assert!(text[prev..r.start].trim().is_empty());
            prev = r.end;
        }
        assert!(text[prev..].trim().is_empty());
    }
}
