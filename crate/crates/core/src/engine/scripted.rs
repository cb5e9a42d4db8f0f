//! Deterministic backends that read the session state instead of the
//! prompt text. Used as metric fixtures and for replay.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::backend::{AgentRole, Backend, BackendError, ChatRequest, Phase, Situation};
use super::execute::StepOutcome;
use super::plan::{render_chain, render_plan};
use super::protocol::{render_protocol, CallBlock, NoCallBlock, ProtocolMessage};
use crate::corpus::{ground_truth_spec, ChainSlot};
use crate::tools::{InfoKey, ToolCard, ToolCategory, Variant};
use crate::toolset_sim::{classify_blocked_slot, slot_need, usable_on, GapKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Behavior {
    /// Follows the ground-truth chain with the best usable tool and full
    /// inputs; refuses with a correctly grounded NoCall when blocked.
    Oracle,
    /// Like Oracle, but the last `k` chain steps use applicable tools of a
    /// category outside the chain.
    Deviant { k: usize },
    /// Like Oracle, but omits a compulsory input at step `j` (1-based),
    /// then retries correctly.
    Clumsy { j: usize },
    /// Refuses immediately.
    Refuser { nocall: Option<NoCallBlock> },
    /// Returns the last message verbatim.
    Echo,
    /// Like Oracle, but names the wrong category when refusing.
    Misgrounded,
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behavior::Oracle => f.write_str("oracle"),
            Behavior::Deviant { k } => write!(f, "deviant:{k}"),
            Behavior::Clumsy { j } => write!(f, "clumsy:{j}"),
            Behavior::Refuser { .. } => f.write_str("refuser"),
            Behavior::Echo => f.write_str("echo"),
            Behavior::Misgrounded => f.write_str("misgrounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scripted behavior `{0}`")]
pub struct UnknownBehavior(pub String);

impl FromStr for Behavior {
    type Err = UnknownBehavior;

    /// `oracle`, `deviant:K`, `clumsy:J`, `refuser`, `echo`, `misgrounded`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownBehavior(s.trim().to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a.trim().parse::<usize>().map_err(|_| bad())?)),
            None => (lower.as_str(), None),
        };
        Ok(match (name, arg) {
            ("oracle", None) => Behavior::Oracle,
            ("deviant", k) => Behavior::Deviant { k: k.unwrap_or(1) },
            ("clumsy", j) => Behavior::Clumsy { j: j.unwrap_or(1) },
            ("refuser", None) => Behavior::Refuser { nocall: None },
            ("echo", None) => Behavior::Echo,
            ("misgrounded", None) => Behavior::Misgrounded,
            _ => return Err(bad()),
        })
    }
}

pub struct ScriptedBackend {
    pub behavior: Behavior,
    label: String,
}

impl ScriptedBackend {
    pub fn new(behavior: Behavior) -> ScriptedBackend {
        let label = format!("scripted-{behavior}");
        ScriptedBackend { behavior, label }
    }

    pub fn with_label(behavior: Behavior, label: impl Into<String>) -> ScriptedBackend {
        ScriptedBackend { behavior, label: label.into() }
    }
}

impl Backend for ScriptedBackend {
    fn label(&self) -> &str {
        &self.label
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn send(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        if self.behavior == Behavior::Echo {
            return Ok(request.messages.last().map(|m| m.content.clone()).unwrap_or_default());
        }
        if request.phase == Phase::Critique {
            return Ok("No changes.".into());
        }
        let sit = request.situation.ok_or_else(|| BackendError("scripted backend needs session state".into()))?;
        Ok(match request.phase {
            Phase::Decompose => decomposition(&sit, request.role),
            Phase::Conclude => sit.qa.answer.clone(),
            _ => {
                let (msg, candidates) = self.step(&sit);
                let body = render_protocol(&msg);
                if request.reflection {
                    format!("{}\n{body}", reflection_block(&candidates))
                } else {
                    body
                }
            }
        })
    }
}

fn decomposition(sit: &Situation<'_>, role: AgentRole) -> String {
    let lin = first_linearization(sit);
    if role == AgentRole::Planner {
        format!(
            "```json\n{{\n    \"Task Summary\": \"{}\",\n    \"Known Info\": [],\n    \"Self-Reflection\": \"Anatomy and \
             modality are identified first; later tools consume their outputs.\",\n    \"Tool Chain\": {}\n}}\n```",
            sit.qa.question.replace('"', "'"),
            render_chain(&lin)
        )
    } else {
        render_plan(&[], &lin)
    }
}

fn reflection_block(candidates: &[String]) -> String {
    let names = if candidates.is_empty() { "None available".to_string() } else { candidates.join(", ") };
    format!(
        "<Reflection>\n    <Candidates>{names}</Candidates>\n    <Reasoning>Selected the highest-scoring tool whose scope \
         covers the image.</Reasoning>\n    <Constraints>Inputs must already be in the results dictionary.</Constraints>\n\
         </Reflection>"
    )
}

fn first_linearization(sit: &Situation<'_>) -> Vec<ChainSlot> {
    ground_truth_spec(sit.task).slot_linearizations().swap_remove(0)
}

fn executed_count(sit: &Situation<'_>) -> usize {
    sit.steps.iter().filter(|s| matches!(s.outcome, StepOutcome::Executed { .. })).count()
}

fn runnable<'t>(sit: &Situation<'t>, card: &ToolCard) -> bool {
    usable_on(card, sit.record) && card.compulsory_input.iter().all(|k| sit.bank.contains(*k))
}

/// Highest upper bound first; earlier names win ties.
fn best_for<'t>(sit: &Situation<'t>, slot: ChainSlot) -> Option<&'t ToolCard> {
    let mut best: Option<&ToolCard> = None;
    for card in sit.toolset.cards() {
        if card.serves(slot.category, slot.variant) && runnable(sit, card) {
            if best.is_none_or(|b| card.performance.upper > b.performance.upper) {
                best = Some(card);
            }
        }
    }
    best
}

/// Compulsory inputs plus every optional input already in the bank.
fn full_inputs(sit: &Situation<'_>, card: &ToolCard) -> Vec<InfoKey> {
    let mut inputs = card.compulsory_input.clone();
    inputs.extend(card.optional_input.iter().filter(|k| sit.bank.contains(**k)));
    inputs
}

pub fn capability_text(category: ToolCategory, variant: Option<Variant>, need: Option<&str>) -> String {
    let noun = match (category, need) {
        (ToolCategory::BiomarkerQuantifier, Some(n)) => format!("{} {n}", category.capability_noun(variant)),
        (_, Some(n)) => n.to_string(),
        (_, None) => category.capability_noun(variant).to_string(),
    };
    format!("{} the {noun}", category.action_verb())
}

fn call(sit: &Situation<'_>, card: &ToolCard, inputs: Vec<InfoKey>, last: bool) -> ProtocolMessage {
    let need = slot_need(&ChainSlot { category: card.category, variant: card.variant }, sit.record);
    let block = CallBlock {
        purpose: capability_text(card.category, card.variant, need.as_deref()),
        tool: card.name.clone(),
        inputs,
    };
    if last {
        ProtocolMessage::EndCall(block)
    } else {
        ProtocolMessage::Call(block)
    }
}

impl ScriptedBackend {
    /// Next protocol message and the candidate tool names considered.
    fn step(&self, sit: &Situation<'_>) -> (ProtocolMessage, Vec<String>) {
        let lin = first_linearization(sit);
        let done = executed_count(sit);
        if let Behavior::Refuser { nocall } = &self.behavior {
            let n = nocall.clone().unwrap_or(NoCallBlock {
                purpose: "No suitable tool is available".into(),
                category: lin[0].category,
                variant: None,
                anatomy: None,
                modality: None,
                ability: GapKind::CategoryMissing,
            });
            return (ProtocolMessage::NoCall(n), Vec::new());
        }
        let Some(&slot) = lin.get(done) else {
            return (ProtocolMessage::ParseFailure { reason: "chain already complete".into() }, Vec::new());
        };
        let last = done + 1 == lin.len();
        let candidates: Vec<String> = sit
            .toolset
            .cards()
            .filter(|c| c.serves(slot.category, slot.variant))
            .map(|c| c.name.clone())
            .collect();

        if let Behavior::Deviant { k } = self.behavior {
            let k = k.min(lin.len().saturating_sub(2));
            if done >= lin.len() - k {
                if let Some(card) = substitute(sit, slot) {
                    let inputs = full_inputs(sit, card);
                    return (call(sit, card, inputs, last), vec![card.name.clone()]);
                }
            }
        }

        let Some(card) = best_for(sit, slot) else {
            let gap = classify_blocked_slot(sit.toolset, slot, sit.record);
            let mut category = gap.category;
            if self.behavior == Behavior::Misgrounded {
                let i = ToolCategory::ALL.iter().position(|c| *c == category).expect("listed");
                category = ToolCategory::ALL[(i + 1) % ToolCategory::ALL.len()];
            }
            let need = gap.missing_label.clone().or_else(|| slot_need(&slot, sit.record));
            let nocall = NoCallBlock {
                purpose: capability_text(slot.category, slot.variant, need.as_deref()),
                category,
                variant: slot.variant,
                anatomy: gap.anatomy,
                modality: gap.modality,
                ability: gap.kind,
            };
            return (ProtocolMessage::NoCall(nocall), candidates);
        };
        let mut inputs = full_inputs(sit, card);
        if let Behavior::Clumsy { j } = self.behavior {
            let failed_before = sit.steps.iter().any(|s| matches!(s.outcome, StepOutcome::IoError { .. }));
            if !failed_before && done + 1 == j {
                let omitted = card.compulsory_input[0];
                inputs.retain(|k| *k != omitted);
            }
        }
        (call(sit, card, inputs, last), candidates)
    }
}

/// A runnable tool of a category outside the task's chain.
fn substitute<'t>(sit: &Situation<'t>, slot: ChainSlot) -> Option<&'t ToolCard> {
    let chain = ground_truth_spec(sit.task).categories();
    let order = [
        ToolCategory::ImagingDiagnoser,
        ToolCategory::OrganSegmentor,
        ToolCategory::AnomalyDetector,
        ToolCategory::ReportGenerator,
        ToolCategory::GroundedDiagnoser,
        ToolCategory::TreatmentPlanner,
    ];
    let pick = |allowed: &dyn Fn(ToolCategory) -> bool| {
        order.iter().filter(|c| allowed(**c)).find_map(|c| sit.toolset.cards().find(|t| t.category == *c && runnable(sit, t)))
    };
    pick(&|c| !chain.contains(&c)).or_else(|| pick(&|c| c != slot.category))
}

/// Replays stored responses in order.
pub struct CannedBackend {
    label: String,
    responses: Mutex<VecDeque<String>>,
}

impl CannedBackend {
    pub fn new(label: impl Into<String>, responses: Vec<String>) -> CannedBackend {
        CannedBackend { label: label.into(), responses: Mutex::new(responses.into()) }
    }
}

impl Backend for CannedBackend {
    fn label(&self) -> &str {
        &self.label
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn max_parallelism(&self) -> usize {
        1
    }

    fn send(&self, _request: &ChatRequest<'_>) -> Result<String, BackendError> {
        self.responses
            .lock()
            .expect("canned queue lock")
            .pop_front()
            .ok_or_else(|| BackendError("canned responses exhausted".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn behavior_names() {
        for b in [Behavior::Oracle, Behavior::Deviant { k: 2 }, Behavior::Clumsy { j: 3 }, Behavior::Echo, Behavior::Misgrounded] {
            assert_eq!(b.to_string().parse::<Behavior>().unwrap(), b);
        }
        assert_eq!("Refuser".parse::<Behavior>().unwrap(), Behavior::Refuser { nocall: None });
        assert!("oracle:3".parse::<Behavior>().is_err());
        assert!("sage".parse::<Behavior>().is_err());
    }

    #[test]
    fn capability_phrases() {
        assert_eq!(
            capability_text(ToolCategory::BiomarkerQuantifier, None, Some("size")),
            "calculate the biomarker size"
        );
        assert_eq!(capability_text(ToolCategory::OrganSegmentor, None, None), "segment the organs");
    }
}
