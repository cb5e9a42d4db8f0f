use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{PatientRecord, QaPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Decompose,
    Step,
    Conclude,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Decompose => "decompose",
            Stage::Step => "step",
            Stage::Conclude => "conclude",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown stage `{0}`")]
pub struct UnknownStage(pub String);

impl FromStr for Stage {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "decompose" | "decomposition" => Ok(Stage::Decompose),
            "step" | "execute" | "execution" => Ok(Stage::Step),
            "conclude" | "conclusion" => Ok(Stage::Conclude),
            _ => Err(UnknownStage(s.trim().to_string())),
        }
    }
}

/// The templates of one prompt version. Role templates are only needed for
/// multi-agent runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub version: String,
    pub decompose: String,
    pub step: String,
    pub conclude: String,
    pub planner: Option<String>,
    pub executor: Option<String>,
    pub concluder: Option<String>,
}

fn trim_one_newline(s: &str) -> String {
    s.strip_suffix('\n').unwrap_or(s).to_string()
}

impl PromptSet {
    /// Base single-agent templates.
    pub fn base() -> PromptSet {
        PromptSet {
            version: "v0-base".into(),
            decompose: trim_one_newline(include_str!("../../prompts/v0-base/decompose.txt")),
            step: trim_one_newline(include_str!("../../prompts/v0-base/step.txt")),
            conclude: trim_one_newline(include_str!("../../prompts/v0-base/conclude.txt")),
            planner: None,
            executor: None,
            concluder: None,
        }
    }

    /// Refined role templates layered on the base stage templates.
    pub fn refined() -> PromptSet {
        PromptSet {
            version: "v1-refined".into(),
            planner: Some(trim_one_newline(include_str!("../../prompts/v1-refined/planner.txt"))),
            executor: Some(trim_one_newline(include_str!("../../prompts/v1-refined/executor.txt"))),
            concluder: Some(trim_one_newline(include_str!("../../prompts/v1-refined/concluder.txt"))),
            ..PromptSet::base()
        }
    }

    pub fn stage(&self, stage: Stage) -> &str {
        match stage {
            Stage::Decompose => &self.decompose,
            Stage::Step => &self.step,
            Stage::Conclude => &self.conclude,
        }
    }

    pub fn has_roles(&self) -> bool {
        self.planner.is_some() && self.executor.is_some() && self.concluder.is_some()
    }
}

/// Values substituted into stage templates.
#[derive(Debug, Clone, Default)]
pub struct StageContext {
    pub patient_record: String,
    pub query: String,
    pub value_dict: String,
}

impl StageContext {
    pub fn new(record: &PatientRecord, qa: &QaPair, value_dict: String) -> StageContext {
        StageContext { patient_record: patient_record_text(record), query: query_text(qa), value_dict }
    }
}

/// Patient block shown to the agent: information only, image as a
/// placeholder.
pub fn patient_record_text(record: &PatientRecord) -> String {
    format!("$Information$: {},\n\n$Image$: 'PLACEHOLDER_IMAGE'", record.information_json())
}

pub fn query_text(qa: &QaPair) -> String {
    format!("$Query$: {}", qa.question)
}

/// Substitute the context into one stage template.
pub fn render_stage_prompt(stage: Stage, template: &str, ctx: &StageContext) -> String {
    match stage {
        Stage::Decompose => template.replace("{Patient Record}", &ctx.patient_record).replace("{Query}", &ctx.query),
        Stage::Step | Stage::Conclude => template.replace("{value_dict}", &ctx.value_dict),
    }
}

/// Executor system prompt with the plan and tool set filled in.
pub fn render_executor_prompt(template: &str, query: &str, decomposition: &str, toolset: &str) -> String {
    template
        .replace("{query}", query)
        .replace("{decomposition_json}", decomposition)
        .replace("{toolset_description}", toolset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_templates() {
        let set = PromptSet::base();
        let ctx = StageContext { patient_record: "REC".into(), query: "Q?".into(), value_dict: "{'$Image$': 1}".into() };
        let d = render_stage_prompt(Stage::Decompose, set.stage(Stage::Decompose), &ctx);
        assert!(d.contains("Please wait for my query."));
        assert!(d.ends_with("REC\n\nQ?"));
        let s = render_stage_prompt(Stage::Step, set.stage(Stage::Step), &ctx);
        assert!(s.starts_with("# Next Step Planning"));
        assert!(s.contains("Current results dictionary: {'$Image$': 1}"));
        let c = render_stage_prompt(Stage::Conclude, set.stage(Stage::Conclude), &ctx);
        assert!(c.contains("Keep your response brief"));
        assert_eq!("Conclusion".parse::<Stage>().unwrap(), Stage::Conclude);
        assert!("summarise".parse::<Stage>().is_err());
        assert!(PromptSet::refined().has_roles());
    }
}
