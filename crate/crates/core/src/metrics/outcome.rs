use serde::{Deserialize, Serialize};

use crate::corpus::TaskSpec;
use crate::engine::{NoCallBlock, StepOutcome, Terminal, Transcript};
use crate::toolset_sim::{GapKind, GroundTruthGap};

/// Error-free completion, and otherwise the share of the chain executed
/// before the first IO error or abnormal stop (clamped to 1).
pub fn ecr_pfsp(transcript: &Transcript, spec: &TaskSpec) -> (bool, Option<f64>) {
    let first_error = transcript.steps.iter().position(|s| matches!(s.outcome, StepOutcome::IoError { .. }));
    if first_error.is_none() && transcript.is_concluded() {
        return (true, None);
    }
    let before = transcript.steps[..first_error.unwrap_or(transcript.steps.len())]
        .iter()
        .filter(|s| matches!(s.outcome, StepOutcome::Executed { .. }))
        .count();
    (false, Some((before as f64 / spec.linear_len() as f64).min(1.0)))
}

/// Target hit (concluded after a tool of the final chain group) and
/// milestone hit (the task's milestone key reached the bank).
pub fn thr_mhr(transcript: &Transcript, spec: &TaskSpec) -> (bool, bool) {
    let last = transcript.executed_chain.last().map(|e| e.category);
    let target =
        transcript.is_concluded() && last.is_some_and(|c| spec.last_group().iter().any(|slot| slot.category == c));
    (target, transcript.final_bank.contains(spec.milestone_key))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Unsolvability {
    /// Declined an unsolvable task; `None` for solvable cells.
    pub uar: Option<bool>,
    /// Declined and named the withheld resource.
    pub ugr: Option<bool>,
    /// Declined a solvable task.
    pub false_refusal: bool,
}

/// The refusal that ended the session or triggered a build.
pub fn refusal(transcript: &Transcript) -> Option<&NoCallBlock> {
    transcript.nocall().or_else(|| transcript.build.as_ref().map(|b| &b.nocall))
}

pub fn grounding_matches(nocall: &NoCallBlock, gap: &GroundTruthGap) -> bool {
    nocall.ability == gap.kind
        && nocall.category == gap.category
        && (gap.kind == GapKind::CategoryMissing || (nocall.anatomy == gap.anatomy && nocall.modality == gap.modality))
}

pub fn unsolvability_assess(transcript: &Transcript, gap: Option<&GroundTruthGap>) -> Unsolvability {
    let declined = refusal(transcript);
    match gap {
        Some(gap) => {
            let uar = declined.is_some();
            Unsolvability { uar: Some(uar), ugr: Some(declined.is_some_and(|n| grounding_matches(n, gap))), false_refusal: false }
        }
        None => Unsolvability { uar: None, ugr: None, false_refusal: matches!(transcript.terminal, Terminal::NoCallStop { .. }) },
    }
}

/// Completion from its constituent flags. `solvable_case` covers solvable
/// cells and cells recovered through a successful build.
pub fn completion_from_flags(solvable_case: bool, ecr: bool, thr: bool, uar: bool, ugr: bool) -> bool {
    if solvable_case {
        ecr && thr
    } else {
        uar && ugr
    }
}

pub fn task_completion(transcript: &Transcript, spec: &TaskSpec, gap: Option<&GroundTruthGap>) -> bool {
    let built = transcript.build.as_ref().is_some_and(|b| b.success) && transcript.is_concluded();
    let (ecr, _) = ecr_pfsp(transcript, spec);
    let (thr, _) = thr_mhr(transcript, spec);
    let u = unsolvability_assess(transcript, gap);
    completion_from_flags(gap.is_none() || built, ecr, thr, u.uar.unwrap_or(false), u.ugr.unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn completion_is_monotone(flags in proptest::array::uniform5(any::<bool>()), flip in 1usize..5) {
            let [s, a, b, c, d] = flags;
            let mut raised = flags;
            raised[flip] = true;
            let [_, a2, b2, c2, d2] = raised;
            if completion_from_flags(s, a, b, c, d) {
                prop_assert!(completion_from_flags(s, a2, b2, c2, d2));
            }
        }
    }
}
