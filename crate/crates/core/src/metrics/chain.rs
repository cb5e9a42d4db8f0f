use std::collections::HashMap;

use crate::corpus::{PatientRecord, TaskSpec};
use crate::engine::Transcript;
use crate::tools::{ToolCard, ToolCategory};
use crate::toolset_sim::{usable_on, ToolSet};

/// Plain edit distance with unit insert, delete and substitute costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Smallest edit distance to any linearization of the chain.
pub fn levenshtein_chain(pred: &[ToolCategory], spec: &TaskSpec) -> usize {
    spec.linearizations().iter().map(|lin| levenshtein(pred, lin)).min().expect("chains have a linearization")
}

/// Share of predicted positions not covered by the chain's category
/// multiset. An empty prediction scores 1.0.
pub fn fdr(pred: &[ToolCategory], spec: &TaskSpec) -> f64 {
    if pred.is_empty() {
        return 1.0;
    }
    let mut remaining: HashMap<ToolCategory, usize> = HashMap::new();
    for c in spec.categories() {
        *remaining.entry(c).or_default() += 1;
    }
    let mut false_hits = 0;
    for c in pred {
        match remaining.get_mut(c) {
            Some(n) if *n > 0 => *n -= 1,
            _ => false_hits += 1,
        }
    }
    false_hits as f64 / pred.len() as f64
}

/// Best positional agreement with any linearization.
pub fn tma(pred: &[ToolCategory], spec: &TaskSpec) -> f64 {
    spec.linearizations()
        .iter()
        .map(|lin| pred.iter().zip(lin).filter(|(a, b)| a == b).count() as f64 / lin.len() as f64)
        .fold(0.0, f64::max)
}

/// `(n - rank + 1) / n`.
pub fn ots_score(n: usize, rank: usize) -> f64 {
    assert!(n >= 1 && (1..=n).contains(&rank), "rank {rank} outside 1..={n}");
    (n - rank + 1) as f64 / n as f64
}

/// Score of one selection: the candidates are the tools usable on the
/// record that serve the selected tool's category and variant. Rank 1 is
/// the highest upper bound; ties share the better rank. `None` when the
/// tool is unknown or was the only candidate.
pub fn ots_step(tool: &str, toolset: &[&ToolCard], record: &PatientRecord) -> Option<f64> {
    let chosen = toolset.iter().find(|c| c.name == tool)?;
    let candidates: Vec<&&ToolCard> =
        toolset.iter().filter(|c| c.serves(chosen.category, chosen.variant) && usable_on(c, record)).collect();
    let n = candidates.len().max(1);
    if n < 2 {
        return None;
    }
    let rank = 1 + candidates.iter().filter(|c| c.performance.upper > chosen.performance.upper).count();
    Some(ots_score(n, rank.min(n)))
}

/// Per-step scores over the executed chain, with any built tool counted
/// as part of the set.
pub fn ots_steps(transcript: &Transcript, toolset: &ToolSet, record: &PatientRecord) -> Vec<f64> {
    let mut cards: Vec<&ToolCard> = toolset.cards().collect();
    let built = transcript.build.as_ref().and_then(|b| b.tool.as_ref());
    if let Some(card) = built {
        cards.push(card);
    }
    transcript.executed_chain.iter().filter_map(|e| ots_step(&e.tool, &cards, record)).collect()
}

/// Mean over contested selections; 1.0 when no selection was contested.
pub fn ots_mean(steps: &[f64]) -> f64 {
    if steps.is_empty() {
        1.0
    } else {
        steps.iter().sum::<f64>() / steps.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ground_truth_spec, TaskType};
    use ToolCategory::*;

    fn spec(n: u8) -> TaskSpec {
        ground_truth_spec(TaskType::new(n).unwrap())
    }

    #[test]
    fn distance_examples() {
        assert_eq!(levenshtein_chain(&[AnatomyClassifier, ModalityClassifier, AnomalyDetector, OrganSegmentor], &spec(4)), 0);
        assert_eq!(levenshtein_chain(&[AnatomyClassifier, ModalityClassifier, ImagingDiagnoser], &spec(1)), 1);
        assert_eq!(levenshtein_chain(&[], &spec(1)), 3);
    }

    #[test]
    fn fdr_examples() {
        let s = spec(1);
        assert_eq!(fdr(&[AnatomyClassifier, ModalityClassifier, OrganSegmentor, ReportGenerator], &s), 0.25);
        assert_eq!(fdr(&[AnatomyClassifier, AnatomyClassifier, ModalityClassifier, OrganSegmentor], &s), 0.25);
        assert_eq!(fdr(&[AnatomyClassifier, ModalityClassifier, OrganSegmentor], &s), 0.0);
        assert_eq!(fdr(&[], &s), 1.0);
    }

    #[test]
    fn tma_examples() {
        let s = spec(1);
        assert_eq!(tma(&[AnatomyClassifier, ModalityClassifier, AnomalyDetector], &s), 2.0 / 3.0);
        assert_eq!(tma(&[ModalityClassifier, AnatomyClassifier, OrganSegmentor], &s), 1.0 / 3.0);
        assert_eq!(tma(&[AnatomyClassifier, ModalityClassifier, OrganSegmentor], &s), 1.0);
        assert_eq!(tma(&[], &s), 0.0);
    }

    #[test]
    fn ots_examples() {
        assert_eq!(ots_score(4, 2), 0.75);
        assert_eq!(ots_score(4, 1), 1.0);
        assert_eq!(ots_mean(&[]), 1.0);
    }
}
