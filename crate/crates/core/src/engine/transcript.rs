use serde::{Deserialize, Serialize};

use super::backend::{AgentRole, Phase};
use super::bank::MemoryBank;
use super::execute::{IoErrorKind, StepOutcome};
use super::plan::{Plan, PlanError};
use super::protocol::{NoCallBlock, ProtocolMessage};
use crate::corpus::TaskType;
use crate::tools::{ToolCard, ToolCategory, Variant};
use crate::toolset_sim::Condition;

/// One request/response exchange with a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub phase: Phase,
    pub role: AgentRole,
    /// Last user message of the request.
    pub request: String,
    pub response: String,
    /// Approximate tokens of the whole message history sent.
    pub context_tokens: usize,
    pub response_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub response: String,
    pub message: ProtocolMessage,
    pub outcome: StepOutcome,
    /// `None` when reflection was not required.
    pub reflection_ok: Option<bool>,
    pub bank: MemoryBank,
}

impl StepRecord {
    pub fn executed(&self) -> Option<(&str, ToolCategory)> {
        match &self.outcome {
            StepOutcome::Executed { tool, category, .. } => Some((tool.as_str(), *category)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutedTool {
    pub tool: String,
    pub category: ToolCategory,
    pub variant: Option<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildEvent {
    pub request: String,
    pub nocall: NoCallBlock,
    pub success: bool,
    /// Card added to the session's tool set on success.
    pub tool: Option<ToolCard>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Terminal {
    Concluded { answer: String },
    NoCallStop { nocall: NoCallBlock },
    IoAbort { error: IoErrorKind },
    IterationCap,
    BackendError { message: String },
}

impl Terminal {
    pub fn name(&self) -> &'static str {
        match self {
            Terminal::Concluded { .. } => "Concluded",
            Terminal::NoCallStop { .. } => "NoCallStop",
            Terminal::IoAbort { .. } => "IOAbort",
            Terminal::IterationCap => "IterationCap",
            Terminal::BackendError { .. } => "BackendError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub qa_id: String,
    pub record_id: String,
    pub task: TaskType,
    pub condition: Condition,
    pub seed: u64,
    pub backend: String,
    pub strategy: String,
    pub plan: Option<Plan>,
    pub plan_error: Option<PlanError>,
    pub turns: Vec<Turn>,
    pub steps: Vec<StepRecord>,
    pub executed_chain: Vec<ExecutedTool>,
    pub build: Option<BuildEvent>,
    pub terminal: Terminal,
    pub final_bank: MemoryBank,
}

impl Transcript {
    pub fn executed_categories(&self) -> Vec<ToolCategory> {
        self.executed_chain.iter().map(|e| e.category).collect()
    }

    pub fn is_concluded(&self) -> bool {
        matches!(self.terminal, Terminal::Concluded { .. })
    }

    /// The refusal that ended the session, if any.
    pub fn nocall(&self) -> Option<&NoCallBlock> {
        match &self.terminal {
            Terminal::NoCallStop { nocall } => Some(nocall),
            _ => None,
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.turns.iter().map(|t| t.context_tokens + t.response_tokens).sum()
    }

    /// Largest context sent in any turn.
    pub fn peak_context_tokens(&self) -> usize {
        self.turns.iter().map(|t| t.context_tokens).max().unwrap_or(0)
    }

    /// Raw backend responses in the order they were received.
    pub fn responses(&self) -> Vec<String> {
        self.turns.iter().map(|t| t.response.clone()).collect()
    }
}
