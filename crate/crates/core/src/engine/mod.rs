//! Agent session machinery: memory bank, prompt rendering, protocol and
//! plan parsing, simulated tool execution, backends and the session loop.

mod backend;
mod bank;
mod execute;
pub mod live;
mod plan;
mod prompts;
mod protocol;
mod scripted;
mod session;
mod transcript;

pub use backend::{approx_tokens, AgentRole, Backend, BackendError, ChatMessage, ChatRequest, Phase, Role, Situation};
pub use bank::{py_str, record_value, MemoryBank};
pub use execute::{execute_call, IoErrorKind, StepOutcome};
pub use plan::{parse_decomposition, render_chain, render_plan, Plan, PlanError};
pub use prompts::{
    patient_record_text, query_text, render_executor_prompt, render_stage_prompt, PromptSet, Stage, StageContext,
    UnknownStage,
};
pub use protocol::{parse_protocol, render_protocol, CallBlock, NoCallBlock, ProtocolMessage};
pub use scripted::{capability_text, Behavior, CannedBackend, ScriptedBackend, UnknownBehavior};
pub use session::{
    run_agents, run_session, Agents, Limits, SessionError, SessionOptions, ToolBuilder, BUILD_DONE, PLANNER_RETRY,
    REFLECTION_RETRY,
};
pub use transcript::{BuildEvent, ExecutedTool, StepRecord, Terminal, Transcript, Turn};
