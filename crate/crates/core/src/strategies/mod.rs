//! Prompting strategies layered over the engine: self-reflection and
//! few-shot overlays, the planner/executor/concluder split, prompt
//! critique rounds and simulated tool building.

mod build;
mod registry;

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{PatientRecord, QaPair};
use crate::engine::{
    run_agents, Agents, Backend, Limits, PromptSet, SessionError, SessionOptions, Stage, ToolBuilder, Transcript,
};
use crate::toolset_sim::ToolSet;

pub use build::{emit_build_request, BuildRequest, SimulatedBuilder};
pub use registry::{critique_prompt_round, CritiqueError, PromptRegistry, RegistryError, CRITIQUE_INSTRUCTIONS};

const STEP_REFLECTION: &str = include_str!("../../prompts/overlays/step_reflection.txt");
const STEP_FEWSHOT: &str = include_str!("../../prompts/overlays/step_fewshot.txt");
const DECOMPOSE_REFLECTION: &str = include_str!("../../prompts/overlays/decompose_reflection.txt");
const CONCLUDE_REFLECTION: &str = include_str!("../../prompts/overlays/conclude_reflection.txt");
const CONCLUDE_FEWSHOT: &str = include_str!("../../prompts/overlays/conclude_fewshot.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StrategyFlags {
    #[serde(default)]
    pub self_reflection: bool,
    #[serde(default)]
    pub few_shot: bool,
    #[serde(default)]
    pub multi_agent: bool,
    #[serde(default)]
    pub auto_build: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum BuilderPolicy {
    #[default]
    ExactMatch,
    Off,
}

impl FromStr for BuilderPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "exactmatch" | "exact" => Ok(BuilderPolicy::ExactMatch),
            "off" | "none" => Ok(BuilderPolicy::Off),
            _ => Err(s.trim().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyConfig {
    #[serde(default)]
    pub flags: StrategyFlags,
    /// Registry version; empty selects `v0-base`, or `v1-refined` for
    /// multi-agent runs.
    #[serde(default)]
    pub prompt_set: String,
    #[serde(default)]
    pub builder_policy: BuilderPolicy,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig { flags: StrategyFlags::default(), prompt_set: String::new(), builder_policy: BuilderPolicy::ExactMatch }
    }
}

impl StrategyConfig {
    pub fn prompt_version(&self) -> &str {
        match (self.prompt_set.as_str(), self.flags.multi_agent) {
            ("", false) => "v0-base",
            ("", true) => "v1-refined",
            (v, _) => v,
        }
    }

    /// Short stable name: `base`, or the enabled flags joined by `+`, with
    /// `@version` when a non-default prompt set is selected.
    pub fn label(&self) -> String {
        let f = self.flags;
        let parts: Vec<&str> = [
            (f.self_reflection, "reflection"),
            (f.few_shot, "fewshot"),
            (f.multi_agent, "multi"),
            (f.auto_build, "build"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        let mut label = if parts.is_empty() { "base".to_string() } else { parts.join("+") };
        if !self.prompt_set.is_empty() {
            label.push('@');
            label.push_str(&self.prompt_set);
        }
        label
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Append the overlays for `stage`: few-shot examples first, then the
/// reflection requirement. With both flags off the template is returned
/// unchanged.
pub fn augment_prompt(base: &str, stage: Stage, flags: StrategyFlags) -> String {
    let mut out = base.to_string();
    let mut push = |overlay: &str| {
        out.push_str("\n\n");
        out.push_str(overlay.trim_end());
    };
    if flags.few_shot {
        match stage {
            Stage::Step => push(STEP_FEWSHOT),
            Stage::Conclude => push(CONCLUDE_FEWSHOT),
            Stage::Decompose => {}
        }
    }
    if flags.self_reflection {
        match stage {
            Stage::Step => push(STEP_REFLECTION),
            Stage::Conclude => push(CONCLUDE_REFLECTION),
            Stage::Decompose => push(DECOMPOSE_REFLECTION),
        }
    }
    out
}

/// Stage templates with overlays applied. Role templates already carry
/// their own reflection and example sections and are left alone.
pub fn augment_prompt_set(set: &PromptSet, flags: StrategyFlags) -> PromptSet {
    let mut out = set.clone();
    out.decompose = augment_prompt(&set.decompose, Stage::Decompose, flags);
    out.step = augment_prompt(&set.step, Stage::Step, flags);
    out.conclude = augment_prompt(&set.conclude, Stage::Conclude, flags);
    out
}

static REFLECTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<Reflection>(.*?)</Reflection>").unwrap());
static PROTOCOL_OPEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<(Call|EndCall|NoCall)>").unwrap());

/// True when a complete `<Reflection>` block (non-empty Candidates,
/// Reasoning and Constraints) appears before the first protocol block.
pub fn validate_reflection(response: &str) -> bool {
    let Some(protocol) = PROTOCOL_OPEN.find(response) else {
        return false;
    };
    let Some(caps) = REFLECTION.captures(&response[..protocol.start()]) else {
        return false;
    };
    let body = caps.get(1).map_or("", |m| m.as_str());
    ["Candidates", "Reasoning", "Constraints"].iter().all(|tag| {
        let re = Regex::new(&format!(r"(?s)<{tag}>(.*?)</{tag}>")).expect("static tag pattern");
        re.captures(body).and_then(|c| c.get(1)).is_some_and(|m| !m.as_str().trim().is_empty())
    })
}

/// Planner, executor and concluder; the three may be the same backend.
#[derive(Clone, Copy)]
pub struct RoleBackends<'a> {
    pub planner: &'a dyn Backend,
    pub executor: &'a dyn Backend,
    pub concluder: &'a dyn Backend,
}

impl<'a> RoleBackends<'a> {
    pub fn shared(backend: &'a dyn Backend) -> RoleBackends<'a> {
        RoleBackends { planner: backend, executor: backend, concluder: backend }
    }
}

pub fn run_multi_agent(
    backends: RoleBackends<'_>,
    qa: &QaPair,
    record: &PatientRecord,
    toolset: &ToolSet,
    options: &SessionOptions<'_>,
) -> Result<Transcript, SessionError> {
    let agents = Agents::Multi { planner: backends.planner, executor: backends.executor, concluder: backends.concluder };
    run_agents(agents, qa, record, toolset, options)
}

/// Session options for a strategy. `prompts` must already be the
/// augmented set from [`augment_prompt_set`].
pub fn session_options<'a>(
    config: &StrategyConfig,
    prompts: &'a PromptSet,
    limits: Limits,
    builder: Option<&'a dyn ToolBuilder>,
) -> SessionOptions<'a> {
    SessionOptions {
        prompts,
        strategy: config.label(),
        limits,
        reflection_check: config.flags.self_reflection.then_some(validate_reflection as fn(&str) -> bool),
        builder: if config.flags.auto_build { builder } else { None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlays_compose_in_order() {
        let base = PromptSet::base();
        assert_eq!(augment_prompt(&base.step, Stage::Step, StrategyFlags::default()), base.step);
        let both = StrategyFlags { self_reflection: true, few_shot: true, ..Default::default() };
        let text = augment_prompt(&base.step, Stage::Step, both);
        let example = text.find("Segment organs in Head and Neck X-ray").unwrap();
        let requirement = text.find("## Reflection Requirement").unwrap();
        assert!(example < requirement);
        for child in ["<Candidates>", "<Reasoning>", "<Constraints>"] {
            assert!(text[requirement..].contains(child));
        }
        assert_eq!(augment_prompt_set(&base, StrategyFlags::default()), base);
    }

    #[test]
    fn reflection_check() {
        let good = "<Reflection>\n<Candidates>TOOL1</Candidates>\n<Reasoning>r</Reasoning>\n<Constraints>c</Constraints>\n\
                    </Reflection>\n<Call>\n<Purpose>p</Purpose>\n<Tool>TOOL1</Tool>\n<Input>['$Image$']</Input>\n</Call>";
        assert!(validate_reflection(good));
        assert!(!validate_reflection("<Call><Tool>TOOL1</Tool><Input>[]</Input></Call>"));
        assert!(!validate_reflection(&good.replace("<Constraints>c</Constraints>", "")));
        let after = "<Call><Tool>T</Tool></Call><Reflection><Candidates>a</Candidates><Reasoning>b</Reasoning>\
                     <Constraints>c</Constraints></Reflection>";
        assert!(!validate_reflection(after));
    }

    #[test]
    fn labels() {
        assert_eq!(StrategyConfig::default().label(), "base");
        let c = StrategyConfig {
            flags: StrategyFlags { self_reflection: true, auto_build: true, ..Default::default() },
            prompt_set: "v0-r2".into(),
            builder_policy: BuilderPolicy::ExactMatch,
        };
        assert_eq!(c.label(), "reflection+build@v0-r2");
        assert_eq!(c.prompt_version(), "v0-r2");
        assert_eq!("exact-match".parse::<BuilderPolicy>().unwrap(), BuilderPolicy::ExactMatch);
    }
}
