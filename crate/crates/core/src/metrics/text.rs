use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextScores {
    pub bleu: f64,
    pub rouge: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("text has no tokens")]
pub struct EmptyText;

/// Lowercase, punctuation replaced by spaces, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.chars()
        .map(|c| if c.is_ascii_punctuation() { ' ' } else { c })
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    for w in tokens.windows(n) {
        *out.entry(w).or_insert(0) += 1;
    }
    out
}

/// Clipped n-gram matches and the candidate's n-gram count.
fn clipped(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let matches = c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum();
    (matches, candidate.len().saturating_sub(n - 1))
}

/// BLEU-4 with add-one smoothing on the 2- to 4-gram precisions and the
/// usual brevity penalty; unigram recall; unigram F1.
pub fn text_metrics(candidate: &str, reference: &str) -> Result<TextScores, EmptyText> {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return Err(EmptyText);
    }
    let (overlap, _) = clipped(&cand, &refr, 1);
    let precision = overlap as f64 / cand.len() as f64;
    let recall = overlap as f64 / refr.len() as f64;
    let f1 = if overlap == 0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };

    let bleu = if overlap == 0 {
        0.0
    } else {
        let mut log_sum = precision.ln();
        for n in 2..=4 {
            let (m, total) = clipped(&cand, &refr, n);
            log_sum += ((m + 1) as f64 / (total + 1) as f64).ln();
        }
        let bp = if cand.len() >= refr.len() { 1.0 } else { (1.0 - refr.len() as f64 / cand.len() as f64).exp() };
        (bp * (log_sum / 4.0).exp()).clamp(0.0, 1.0)
    };
    Ok(TextScores { bleu, rouge: recall, f1 })
}
