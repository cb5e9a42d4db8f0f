use serde::{Deserialize, Serialize};

use super::bank::MemoryBank;
use super::transcript::StepRecord;
use crate::corpus::{PatientRecord, QaPair, TaskType};
use crate::toolset_sim::ToolSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Decompose,
    Step,
    Conclude,
    Critique,
}

/// Who is speaking. A single-agent session uses `Single` for every phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentRole {
    Single,
    Planner,
    Executor,
    Concluder,
    Critic,
}

impl AgentRole {
    pub fn name(self) -> &'static str {
        match self {
            AgentRole::Single => "single",
            AgentRole::Planner => "planner",
            AgentRole::Executor => "executor",
            AgentRole::Concluder => "concluder",
            AgentRole::Critic => "critic",
        }
    }
}

/// Session state visible to scripted backends. Live backends only read the
/// messages.
#[derive(Debug, Clone, Copy)]
pub struct Situation<'a> {
    pub record: &'a PatientRecord,
    pub qa: &'a QaPair,
    pub task: TaskType,
    pub toolset: &'a ToolSet,
    pub bank: &'a MemoryBank,
    pub steps: &'a [StepRecord],
}

#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub messages: &'a [ChatMessage],
    pub phase: Phase,
    pub role: AgentRole,
    /// A `<Reflection>` block is expected before the protocol block.
    pub reflection: bool,
    pub situation: Option<Situation<'a>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("backend error: {0}")]
pub struct BackendError(pub String);

/// A chat-completion service.
pub trait Backend: Send + Sync {
    fn label(&self) -> &str;
    fn deterministic(&self) -> bool;
    /// Concurrent sessions this backend tolerates.
    fn max_parallelism(&self) -> usize {
        usize::MAX
    }
    fn send(&self, request: &ChatRequest<'_>) -> Result<String, BackendError>;
}

/// Approximate token count (characters / 4, rounded up).
pub fn approx_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}
