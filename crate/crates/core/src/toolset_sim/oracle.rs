use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{slot_need, usable_on, GapKind, GroundTruthGap, SimError, ToolSet};
use crate::corpus::{ground_truth_spec, ChainSlot, PatientRecord, TaskType};
use crate::tools::{Applicability, InfoKey, ToolCard};

/// Search states expanded before giving up.
pub const MAX_EXPANSIONS: usize = 1_000_000;

/// Non-chain calls allowed along one path.
const MAX_EXTRAS: u8 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityVerdict {
    pub solvable: bool,
    /// Tool names of one successful call sequence.
    pub witness_chain: Option<Vec<String>>,
    pub blocking_gap: Option<GroundTruthGap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct State {
    bank: u32,
    progress: u8,
    extras: u8,
}

fn mask(keys: &[InfoKey]) -> u32 {
    keys.iter().fold(0, |m, k| m | k.bit())
}

/// Decide whether some ordering of the ground-truth chain can be executed
/// with `set` on `record`, starting from an image and the patient
/// information. Each call must be in scope, capable of the record's label
/// and have its compulsory inputs in the bank.
pub fn solvability_oracle(set: &ToolSet, record: &PatientRecord, task: TaskType) -> Result<SolvabilityVerdict, SimError> {
    let spec = ground_truth_spec(task);
    let usable: Vec<(&ToolCard, u32, u32)> = set
        .cards()
        .filter(|c| usable_on(c, record))
        .map(|c| (c, mask(&c.compulsory_input), mask(&c.output)))
        .collect();
    let start = State { bank: mask(&[InfoKey::Image, InfoKey::Information]), progress: 0, extras: 0 };

    let mut expansions = 0usize;
    let mut seen_lins: Vec<Vec<ChainSlot>> = Vec::new();
    let mut best: Option<(usize, ChainSlot)> = None;
    for lin in spec.slot_linearizations() {
        if seen_lins.contains(&lin) {
            continue;
        }
        seen_lins.push(lin.clone());
        let mut parent: HashMap<State, (State, usize)> = HashMap::new();
        let mut queue = VecDeque::from([start]);
        parent.insert(start, (start, usize::MAX));
        let mut max_progress = 0usize;
        let mut done = None;
        while let Some(s) = queue.pop_front() {
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(SimError::SearchBudgetExceeded(MAX_EXPANSIONS));
            }
            max_progress = max_progress.max(s.progress as usize);
            if s.progress as usize == lin.len() {
                done = Some(s);
                break;
            }
            let next_slot = lin[s.progress as usize];
            for (i, (card, need, out)) in usable.iter().enumerate() {
                if need & !s.bank != 0 {
                    continue;
                }
                let t = if card.serves(next_slot.category, next_slot.variant) {
                    State { bank: s.bank | out, progress: s.progress + 1, extras: s.extras }
                } else if s.extras < MAX_EXTRAS && out & !s.bank != 0 {
                    State { bank: s.bank | out, progress: s.progress, extras: s.extras + 1 }
                } else {
                    continue;
                };
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(t) {
                    e.insert((s, i));
                    queue.push_back(t);
                }
            }
        }
        if let Some(mut s) = done {
            let mut names = Vec::new();
            while s != start {
                let (p, i) = parent[&s];
                names.push(usable[i].0.name.clone());
                s = p;
            }
            names.reverse();
            return Ok(SolvabilityVerdict { solvable: true, witness_chain: Some(names), blocking_gap: None });
        }
        if best.is_none_or(|(p, _)| max_progress > p) {
            best = Some((max_progress, lin[max_progress]));
        }
    }
    let (_, slot) = best.expect("at least one linearization");
    Ok(SolvabilityVerdict { solvable: false, witness_chain: None, blocking_gap: Some(classify_blocked_slot(set, slot, record)) })
}

/// Describe why no tool in `set` can fill `slot` for `record`.
pub fn classify_blocked_slot(set: &ToolSet, slot: ChainSlot, record: &PatientRecord) -> GroundTruthGap {
    let serving: Vec<&ToolCard> = set.cards().filter(|c| c.serves(slot.category, slot.variant)).collect();
    let need = slot_need(&slot, record);
    let universal = GroundTruthGap {
        category: slot.category,
        anatomy: None,
        modality: None,
        kind: GapKind::CategoryMissing,
        missing_label: None,
    };
    let specific = |kind, missing_label| GroundTruthGap {
        category: slot.category,
        anatomy: Some(record.anatomy),
        modality: Some(record.modality),
        kind,
        missing_label,
    };
    if serving.is_empty() {
        return universal;
    }
    let verdicts: Vec<Applicability> =
        serving.iter().map(|c| c.applicability(record.anatomy, record.modality, need.as_deref())).collect();
    if verdicts.iter().all(|v| *v == Applicability::WrongScope) {
        return specific(GapKind::SpecificToolMissing, None);
    }
    if verdicts.iter().all(|v| *v != Applicability::Applicable) {
        return specific(GapKind::InsufficientCapability, need);
    }
    universal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bundled_corpus;
    use crate::toolset_sim::{build_toolset, Condition};

    #[test]
    fn every_bundled_cell_matches_its_condition() {
        let corpus = bundled_corpus();
        for entry in &corpus.entries {
            for task in TaskType::all() {
                for condition in Condition::ALL {
                    let Ok((set, gap)) = build_toolset(condition, 7, &entry.record, task) else {
                        assert!(condition.is_insufficient() || condition == Condition::Differentiated);
                        continue;
                    };
                    let v = solvability_oracle(&set, &entry.record, task).unwrap();
                    assert_eq!(v.solvable, !condition.is_insufficient(), "{condition} {task} {}", entry.record.record_id);
                    assert_eq!(v.blocking_gap, gap, "{condition} {task}");
                    if let Some(w) = v.witness_chain {
                        assert!(w.len() >= ground_truth_spec(task).linear_len());
                    }
                }
            }
        }
    }
}
