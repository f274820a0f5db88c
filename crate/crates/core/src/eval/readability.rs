use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readability {
    pub fk_grade: f64,
    pub reading_ease: f64,
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

static SENTENCE_END: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.!?]+").unwrap());

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel groups (y counts as a vowel), minus a final silent `e` unless the
/// word ends in consonant + `le`; at least 1.
pub fn count_syllables(word: &str) -> usize {
    let w: Vec<char> = word.to_lowercase().chars().filter(|c| c.is_alphabetic()).collect();
    if w.is_empty() {
        return 0;
    }
    let mut groups = 0;
    let mut prev = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let n = w.len();
    let silent_e = n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2]);
    let consonant_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
    if silent_e && !consonant_le && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

/// Whitespace tokens that contain at least one letter.
pub fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().filter(|t| t.chars().any(char::is_alphabetic)).collect()
}

/// Runs of text ending in `.`, `!` or `?` (or the end) that contain a word.
pub fn count_sentences(text: &str) -> usize {
    SENTENCE_END.split(text).filter(|s| !words(s).is_empty()).count()
}

pub fn readability_from_counts(words: usize, sentences: usize, syllables: usize) -> Result<Readability> {
    if words == 0 || sentences == 0 {
        return Err(Error::EmptyInput("readability needs at least one word and one sentence".into()));
    }
    let wps = words as f64 / sentences as f64;
    let spw = syllables as f64 / words as f64;
    Ok(Readability {
        fk_grade: 0.39 * wps + 11.8 * spw - 15.59,
        reading_ease: 206.835 - 1.015 * wps - 84.6 * spw,
        words,
        sentences,
        syllables,
    })
}

/// Flesch-Kincaid grade level and Flesch reading ease.
pub fn readability(text: &str) -> Result<Readability> {
    let w = words(text);
    let syllables = w.iter().map(|t| count_syllables(t)).sum();
    readability_from_counts(w.len(), count_sentences(text), syllables)
}
