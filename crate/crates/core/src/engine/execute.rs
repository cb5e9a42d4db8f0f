use serde::{Deserialize, Serialize};

use super::bank::{record_value, MemoryBank};
use super::protocol::CallBlock;
use crate::corpus::PatientRecord;
use crate::tools::{Applicability, InfoKey, ToolCategory, Variant};
use crate::toolset_sim::{need_label, ToolSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IoErrorKind {
    UnknownTool,
    MissingInput,
    CompulsoryOmitted,
    ToolMisuse,
    /// The response held no usable protocol block.
    ParseFailure,
}

impl IoErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            IoErrorKind::UnknownTool => "UnknownTool",
            IoErrorKind::MissingInput => "MissingInput",
            IoErrorKind::CompulsoryOmitted => "CompulsoryOmitted",
            IoErrorKind::ToolMisuse => "ToolMisuse",
            IoErrorKind::ParseFailure => "ParseFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum StepOutcome {
    Executed { tool: String, category: ToolCategory, variant: Option<Variant>, outputs: Vec<InfoKey>, score: f64 },
    IoError { error: IoErrorKind },
    DeniedByAgent,
}

/// Validate and run one Call/EndCall against the simulated tools. Errors
/// leave the bank untouched.
pub fn execute_call(call: &CallBlock, toolset: &ToolSet, bank: &mut MemoryBank, record: &PatientRecord) -> StepOutcome {
    let err = |error| StepOutcome::IoError { error };
    let Some(card) = toolset.get(call.tool.trim()) else {
        return err(IoErrorKind::UnknownTool);
    };
    if call.inputs.iter().any(|k| !bank.contains(*k)) {
        return err(IoErrorKind::MissingInput);
    }
    if card.compulsory_input.iter().any(|k| !call.inputs.contains(k)) {
        return err(IoErrorKind::CompulsoryOmitted);
    }
    let anatomy = bank.anatomy().unwrap_or(record.anatomy);
    let modality = bank.modality().unwrap_or(record.modality);
    let need = need_label(card.category, card.variant, record);
    if card.applicability(anatomy, modality, need.as_deref()) != Applicability::Applicable {
        return err(IoErrorKind::ToolMisuse);
    }
    let provided = card.optional_input.iter().filter(|k| call.inputs.contains(k)).count();
    let score = card.performance_score(provided).expect("count bounded by optional list");
    for key in &card.output {
        bank.set(*key, record_value(*key, record), score);
    }
    StepOutcome::Executed {
        tool: card.name.clone(),
        category: card.category,
        variant: card.variant,
        outputs: card.output.clone(),
        score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{bundled_corpus, Anatomy, Modality, TaskType};
    use crate::tools::{Scope, ToolCard};
    use crate::toolset_sim::{build_toolset, Condition};

    fn call(tool: &str, inputs: &[InfoKey]) -> CallBlock {
        CallBlock { purpose: String::new(), tool: tool.into(), inputs: inputs.to_vec() }
    }

    #[test]
    fn anatomy_then_errors() {
        let record = bundled_corpus().get("head-and-neck__x-ray__sinusitis").unwrap().record.clone();
        let (mut set, _) = build_toolset(Condition::Baseline, 3, &record, TaskType::new(3).unwrap()).unwrap();
        let mut bank = MemoryBank::new();
        let out = execute_call(&call("TOOL1", &[InfoKey::Image]), &set, &mut bank, &record);
        assert!(matches!(out, StepOutcome::Executed { score, .. } if score == 0.95));
        assert_eq!(bank.get(InfoKey::Anatomy), Some("Head and Neck"));
        assert_eq!(bank.scores[&InfoKey::Anatomy], 0.95);

        let before = bank.clone();
        let e = execute_call(&call("TOOL99", &[InfoKey::Image]), &set, &mut bank, &record);
        assert_eq!(e, StepOutcome::IoError { error: IoErrorKind::UnknownTool });
        let e = execute_call(&call("TOOL2", &[InfoKey::Image, InfoKey::Disease]), &set, &mut bank, &record);
        assert_eq!(e, StepOutcome::IoError { error: IoErrorKind::MissingInput });
        let e = execute_call(&call("TOOL2", &[]), &set, &mut bank, &record);
        assert_eq!(e, StepOutcome::IoError { error: IoErrorKind::CompulsoryOmitted });

        let spine_ct = ToolCard::build("", ToolCategory::OrganSegmentor, None, Scope::specific(Anatomy::Spine, Modality::Ct), false, 0.85, 0.85);
        let name = set.push_card(spine_ct);
        let e = execute_call(&call(&name, &[InfoKey::Image]), &set, &mut bank, &record);
        assert_eq!(e, StepOutcome::IoError { error: IoErrorKind::ToolMisuse });
        assert_eq!(bank, before);
    }
}
