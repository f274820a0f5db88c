//! N-gram overlap metrics over lowercased whitespace tokens.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BLEU_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "L")]
    L,
}

impl std::str::FromStr for RougeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(RougeVariant::One),
            "2" => Ok(RougeVariant::Two),
            "L" | "l" => Ok(RougeVariant::L),
            _ => Err(Error::InvalidInput(format!("unknown ROUGE variant {s:?}"))),
        }
    }
}

/// A text-metric value; `empty_input` marks a 0.0 caused by an empty side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextScore {
    pub value: f64,
    pub empty_input: bool,
}

impl TextScore {
    fn of(value: f64) -> Self {
        TextScore { value, empty_input: false }
    }

    const EMPTY: TextScore = TextScore { value: 0.0, empty_input: true };
}

pub fn text_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_default() += 1;
        }
    }
    counts
}

fn clipped_overlap(cand: &HashMap<&[String], usize>, reference: &HashMap<&[String], usize>) -> usize {
    cand.iter().map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0))).sum()
}

fn f1(overlap: f64, cand_total: f64, ref_total: f64) -> f64 {
    if overlap == 0.0 {
        return 0.0;
    }
    let p = overlap / cand_total;
    let r = overlap / ref_total;
    2.0 * p * r / (p + r)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { row[j + 1].max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE F1. When neither text has an n-gram of the requested order the
/// score is 1 for identical token sequences and 0 otherwise.
pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> TextScore {
    let (c, r) = (text_tokens(candidate), text_tokens(reference));
    if c.is_empty() || r.is_empty() {
        return TextScore::EMPTY;
    }
    match variant {
        RougeVariant::L => TextScore::of(f1(lcs_len(&c, &r) as f64, c.len() as f64, r.len() as f64)),
        RougeVariant::One | RougeVariant::Two => {
            let n = if variant == RougeVariant::One { 1 } else { 2 };
            let (cc, rc) = (ngram_counts(&c, n), ngram_counts(&r, n));
            let (ct, rt) = (c.len().saturating_sub(n - 1), r.len().saturating_sub(n - 1));
            if ct == 0 && rt == 0 {
                return TextScore::of(if c == r { 1.0 } else { 0.0 });
            }
            if ct == 0 || rt == 0 {
                return TextScore::of(0.0);
            }
            TextScore::of(f1(clipped_overlap(&cc, &rc) as f64, ct as f64, rt as f64))
        }
    }
}

/// BLEU-4 with uniform weights and the standard brevity penalty. Orders
/// with no clipped match use a count of ε instead of 0; an order the
/// candidate is too short to have counts as matched only when the two
/// token sequences are identical. No unigram match at all scores 0.
pub fn bleu4(candidate: &str, reference: &str) -> TextScore {
    let (c, r) = (text_tokens(candidate), text_tokens(reference));
    if c.is_empty() || r.is_empty() {
        return TextScore::EMPTY;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let total = c.len().saturating_sub(n - 1);
        let p = if total == 0 {
            if c == r { 1.0 } else { BLEU_EPSILON }
        } else {
            let m = clipped_overlap(&ngram_counts(&c, n), &ngram_counts(&r, n));
            if n == 1 && m == 0 {
                return TextScore::of(0.0);
            }
            if m == 0 { BLEU_EPSILON / total as f64 } else { m as f64 / total as f64 }
        };
        log_sum += p.ln();
    }
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    TextScore::of(bp * (log_sum / 4.0).exp())
}
