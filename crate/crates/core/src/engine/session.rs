use serde::{Deserialize, Serialize};

use super::backend::{approx_tokens, AgentRole, Backend, BackendError, ChatMessage, ChatRequest, Phase, Situation};
use super::bank::MemoryBank;
use super::execute::{execute_call, IoErrorKind, StepOutcome};
use super::plan::{parse_decomposition, Plan, PlanError};
use super::prompts::{render_executor_prompt, render_stage_prompt, PromptSet, Stage, StageContext};
use super::protocol::{parse_protocol, NoCallBlock, ProtocolMessage};
use super::transcript::{BuildEvent, ExecutedTool, StepRecord, Terminal, Transcript, Turn};
use crate::corpus::{ground_truth_spec, PatientRecord, QaPair, TaskSpec};
use crate::tools::ToolCard;
use crate::toolset_sim::ToolSet;

pub const REFLECTION_RETRY: &str = "Your response must place a complete <Reflection> block with <Candidates>, \
<Reasoning> and <Constraints> immediately before the Call, EndCall or NoCall block. Please answer again.";

pub const PLANNER_RETRY: &str = "Respond with the structured plan only: a JSON object with \"Task Summary\", \
\"Known Info\", \"Self-Reflection\" and \"Tool Chain\".";

pub const BUILD_DONE: &str = "Building Done. Successful!";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Limits {
    /// Step cap; `None` uses twice the linearized chain length plus 5.
    pub max_steps: Option<usize>,
    pub abort_on_io_error: bool,
}

impl Limits {
    pub fn resolve(&self, spec: &TaskSpec) -> usize {
        self.max_steps.unwrap_or(2 * spec.linear_len() + 5).max(1)
    }
}

/// Turns a refusal into a new tool, or declines.
pub trait ToolBuilder: Send + Sync {
    /// The rendered request text and the granted card, if any.
    fn build(&self, nocall: &NoCallBlock, record: &PatientRecord) -> (String, Option<ToolCard>);
}

pub struct SessionOptions<'a> {
    /// Templates with any strategy overlays already applied.
    pub prompts: &'a PromptSet,
    pub strategy: String,
    pub limits: Limits,
    pub reflection_check: Option<fn(&str) -> bool>,
    pub builder: Option<&'a dyn ToolBuilder>,
}

#[derive(Clone, Copy)]
pub enum Agents<'a> {
    Single(&'a dyn Backend),
    Multi { planner: &'a dyn Backend, executor: &'a dyn Backend, concluder: &'a dyn Backend },
}

impl Agents<'_> {
    pub fn label(&self) -> String {
        match self {
            Agents::Single(b) => b.label().to_string(),
            Agents::Multi { planner, executor, concluder } => {
                let labels = [planner.label(), executor.label(), concluder.label()];
                if labels.iter().all(|l| *l == labels[0]) {
                    labels[0].to_string()
                } else {
                    labels.join("/")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("planner output unreadable after retry: {0}")]
    PlannerParse(PlanError),
    #[error("prompt set `{0}` has no planner/executor/concluder templates")]
    MissingRoleTemplates(String),
}

/// Single-agent session: decompose, step loop, conclude.
pub fn run_session(
    backend: &dyn Backend,
    qa: &QaPair,
    record: &PatientRecord,
    toolset: &ToolSet,
    options: &SessionOptions<'_>,
) -> Transcript {
    run_agents(Agents::Single(backend), qa, record, toolset, options).expect("single-agent sessions cannot fail")
}

struct Run<'a> {
    qa: &'a QaPair,
    record: &'a PatientRecord,
    spec: TaskSpec,
    toolset: ToolSet,
    bank: MemoryBank,
    steps: Vec<StepRecord>,
    turns: Vec<Turn>,
    executed: Vec<ExecutedTool>,
    build: Option<BuildEvent>,
}

impl Run<'_> {
    fn send(
        &mut self,
        backend: &dyn Backend,
        messages: &[ChatMessage],
        phase: Phase,
        role: AgentRole,
        reflection: bool,
    ) -> Result<String, BackendError> {
        let response = {
            let situation = Situation {
                record: self.record,
                qa: self.qa,
                task: self.qa.task,
                toolset: &self.toolset,
                bank: &self.bank,
                steps: &self.steps,
            };
            let request = ChatRequest { messages, phase, role, reflection, situation: Some(situation) };
            backend.send(&request)?
        };
        self.turns.push(Turn {
            phase,
            role,
            request: messages.last().map(|m| m.content.clone()).unwrap_or_default(),
            response: response.clone(),
            context_tokens: messages.iter().map(|m| approx_tokens(&m.content)).sum(),
            response_tokens: approx_tokens(&response),
        });
        Ok(response)
    }

    fn stage_ctx(&self) -> StageContext {
        StageContext::new(self.record, self.qa, self.bank.render_values())
    }
}

/// Run a session with one backend or with planner/executor/concluder
/// roles. Roles hand off forward only: the executor sees the planner's
/// output, the concluder sees the final bank.
pub fn run_agents(
    agents: Agents<'_>,
    qa: &QaPair,
    record: &PatientRecord,
    toolset: &ToolSet,
    options: &SessionOptions<'_>,
) -> Result<Transcript, SessionError> {
    let prompts = options.prompts;
    let multi = matches!(agents, Agents::Multi { .. });
    if multi && !prompts.has_roles() {
        return Err(SessionError::MissingRoleTemplates(prompts.version.clone()));
    }
    let (planner, executor, concluder) = match agents {
        Agents::Single(b) => (b, b, b),
        Agents::Multi { planner, executor, concluder } => (planner, executor, concluder),
    };
    let role = |r: AgentRole| if multi { r } else { AgentRole::Single };
    let mut run = Run {
        qa,
        record,
        spec: ground_truth_spec(qa.task),
        toolset: toolset.clone(),
        bank: MemoryBank::new(),
        steps: Vec::new(),
        turns: Vec::new(),
        executed: Vec::new(),
        build: None,
    };
    let reflection = options.reflection_check.is_some();

    // Decomposition.
    let mut history: Vec<ChatMessage>;
    let mut plan: Option<Plan> = None;
    let mut plan_error = None;
    let terminal = 'session: {
        if multi {
            let ctx = run.stage_ctx();
            let mut planner_history = vec![
                ChatMessage::system(prompts.planner.clone().unwrap_or_default()),
                ChatMessage::user(format!("{}\n\n{}", ctx.patient_record, ctx.query)),
            ];
            let mut response = match run.send(planner, &planner_history, Phase::Decompose, AgentRole::Planner, false) {
                Ok(r) => r,
                Err(e) => break 'session Terminal::BackendError { message: e.0 },
            };
            if parse_decomposition(&response).is_err() {
                planner_history.push(ChatMessage::assistant(response));
                planner_history.push(ChatMessage::user(PLANNER_RETRY));
                response = match run.send(planner, &planner_history, Phase::Decompose, AgentRole::Planner, false) {
                    Ok(r) => r,
                    Err(e) => break 'session Terminal::BackendError { message: e.0 },
                };
            }
            match parse_decomposition(&response) {
                Ok(p) => plan = Some(p),
                Err(e) => return Err(SessionError::PlannerParse(e)),
            }
            let system = render_executor_prompt(
                prompts.executor.as_deref().unwrap_or_default(),
                &qa.question,
                response.trim(),
                &run.toolset.description(),
            );
            history = vec![ChatMessage::system(system)];
        } else {
            let prompt = render_stage_prompt(Stage::Decompose, &prompts.decompose, &run.stage_ctx());
            history = vec![ChatMessage::user(prompt)];
            let response = match run.send(planner, &history, Phase::Decompose, AgentRole::Single, false) {
                Ok(r) => r,
                Err(e) => break 'session Terminal::BackendError { message: e.0 },
            };
            history.push(ChatMessage::assistant(response.clone()));
            match parse_decomposition(&response) {
                Ok(p) => plan = Some(p),
                Err(e) => plan_error = Some(e),
            }
        }

        // Step loop.
        let max_steps = options.limits.resolve(&run.spec);
        let mut prefix = String::new();
        let mut concluded_step = false;
        for index in 1..=max_steps {
            let body = if multi {
                format!("Known information: {}\n\nProvide your next step.", run.bank.render_values())
            } else {
                let mut s = render_stage_prompt(Stage::Step, &prompts.step, &run.stage_ctx());
                if index == 1 {
                    s.push_str("\n\n## Available Tools\n");
                    s.push_str(&run.toolset.description());
                }
                s
            };
            history.push(ChatMessage::user(format!("{prefix}{body}")));
            prefix.clear();
            let mut response = match run.send(executor, &history, Phase::Step, role(AgentRole::Executor), reflection) {
                Ok(r) => r,
                Err(e) => break 'session Terminal::BackendError { message: e.0 },
            };
            history.push(ChatMessage::assistant(response.clone()));
            let mut reflection_ok = None;
            if let Some(check) = options.reflection_check {
                let mut ok = check(&response);
                if !ok {
                    history.push(ChatMessage::user(REFLECTION_RETRY));
                    response = match run.send(executor, &history, Phase::Step, role(AgentRole::Executor), reflection) {
                        Ok(r) => r,
                        Err(e) => break 'session Terminal::BackendError { message: e.0 },
                    };
                    history.push(ChatMessage::assistant(response.clone()));
                    ok = check(&response);
                }
                reflection_ok = Some(ok);
            }

            let message = parse_protocol(&response);
            let outcome = match &message {
                ProtocolMessage::Call(c) | ProtocolMessage::EndCall(c) => {
                    execute_call(c, &run.toolset, &mut run.bank, record)
                }
                ProtocolMessage::NoCall(_) => StepOutcome::DeniedByAgent,
                ProtocolMessage::ParseFailure { .. } => StepOutcome::IoError { error: IoErrorKind::ParseFailure },
            };
            if let StepOutcome::Executed { tool, category, variant, .. } = &outcome {
                run.executed.push(ExecutedTool { tool: tool.clone(), category: *category, variant: *variant });
            }
            run.steps.push(StepRecord {
                index,
                response: response.clone(),
                message: message.clone(),
                outcome: outcome.clone(),
                reflection_ok,
                bank: run.bank.clone(),
            });
            match (&message, &outcome) {
                (ProtocolMessage::EndCall(_), StepOutcome::Executed { .. }) => {
                    concluded_step = true;
                    break;
                }
                (_, StepOutcome::IoError { error }) => {
                    if options.limits.abort_on_io_error {
                        break 'session Terminal::IoAbort { error: *error };
                    }
                    prefix = format!("Execution failed: {}\n\n", error.name());
                }
                (ProtocolMessage::NoCall(nocall), _) => {
                    let Some(builder) = options.builder.filter(|_| run.build.is_none()) else {
                        break 'session Terminal::NoCallStop { nocall: nocall.clone() };
                    };
                    let (request, card) = builder.build(nocall, record);
                    let Some(card) = card else {
                        run.build = Some(BuildEvent { request, nocall: nocall.clone(), success: false, tool: None });
                        break 'session Terminal::NoCallStop { nocall: nocall.clone() };
                    };
                    let name = run.toolset.push_card(card);
                    let card = run.toolset.get(&name).expect("just inserted").clone();
                    prefix = format!("{BUILD_DONE}\n\n## New Tool\n{}\n\n", card.render());
                    run.build = Some(BuildEvent { request, nocall: nocall.clone(), success: true, tool: Some(card) });
                }
                _ => {}
            }
        }
        if !concluded_step {
            break 'session Terminal::IterationCap;
        }

        // Conclusion.
        let (conclude_backend, conclude_history) = if multi {
            let user = format!("Query: {}\n\nKnown Info: {}", qa.question, run.bank.render_values());
            (concluder, vec![ChatMessage::system(prompts.concluder.clone().unwrap_or_default()), ChatMessage::user(user)])
        } else {
            history.push(ChatMessage::user(render_stage_prompt(Stage::Conclude, &prompts.conclude, &run.stage_ctx())));
            (concluder, history)
        };
        match run.send(conclude_backend, &conclude_history, Phase::Conclude, role(AgentRole::Concluder), false) {
            Ok(answer) => Terminal::Concluded { answer },
            Err(e) => Terminal::BackendError { message: e.0 },
        }
    };

    Ok(Transcript {
        qa_id: qa.id(),
        record_id: record.record_id.clone(),
        task: qa.task,
        condition: toolset.condition,
        seed: toolset.seed,
        backend: agents.label(),
        strategy: options.strategy.clone(),
        plan,
        plan_error,
        turns: run.turns,
        steps: run.steps,
        executed_chain: run.executed,
        build: run.build,
        terminal,
        final_bank: run.bank,
    })
}
