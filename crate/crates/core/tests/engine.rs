use radbench::corpus::{bundled_corpus, ground_truth_spec, TaskType};
use radbench::engine::{
    parse_protocol, run_agents, run_session, Agents, Behavior, CannedBackend, IoErrorKind, Limits, PromptSet,
    ProtocolMessage, ScriptedBackend, SessionError, SessionOptions, StepOutcome, Terminal,
};
use radbench::toolset_sim::{build_toolset, Condition};

fn options(prompts: &PromptSet) -> SessionOptions<'_> {
    SessionOptions { prompts, strategy: "base".into(), limits: Limits::default(), reflection_check: None, builder: None }
}

#[test]
fn oracle_follows_the_chain_on_baseline() {
    let corpus = bundled_corpus();
    let prompts = PromptSet::base();
    let backend = ScriptedBackend::new(Behavior::Oracle);
    for entry in &corpus.entries {
        for task in TaskType::all() {
            let (set, gap) = build_toolset(Condition::Baseline, 3, &entry.record, task).unwrap();
            assert!(gap.is_none());
            let qa = entry.qa_for(task);
            let t = run_session(&backend, qa, &entry.record, &set, &options(&prompts));
            assert_eq!(t.terminal, Terminal::Concluded { answer: qa.answer.clone() }, "{} {task:?}", entry.record.record_id);
            let expected = ground_truth_spec(task).linearizations().swap_remove(0);
            assert_eq!(t.executed_categories(), expected);
            assert!(t.plan.is_some());
            assert!(t.steps.iter().all(|s| matches!(s.outcome, StepOutcome::Executed { .. })));
        }
    }
}

#[test]
fn oracle_refuses_with_the_generated_gap() {
    let corpus = bundled_corpus();
    let prompts = PromptSet::base();
    let backend = ScriptedBackend::new(Behavior::Oracle);
    for condition in [Condition::InsufficientConfig1, Condition::InsufficientConfig2, Condition::InsufficientConfig3] {
        for entry in &corpus.entries {
            for task in TaskType::all() {
                let (set, gap) = build_toolset(condition, 11, &entry.record, task).unwrap();
                let gap = gap.expect("insufficient sets carry a gap");
                let t = run_session(&backend, entry.qa_for(task), &entry.record, &set, &options(&prompts));
                let nocall = t.nocall().unwrap_or_else(|| panic!("{condition:?} {task:?}: {:?}", t.terminal));
                assert_eq!(nocall.category, gap.category);
                assert_eq!(nocall.ability, gap.kind);
                assert_eq!(nocall.anatomy, gap.anatomy);
                assert_eq!(nocall.modality, gap.modality);
            }
        }
    }
}

#[test]
fn refuser_stops_immediately() {
    let corpus = bundled_corpus();
    let entry = &corpus.entries[1];
    let task = TaskType::new(5).unwrap();
    let (set, _) = build_toolset(Condition::Baseline, 1, &entry.record, task).unwrap();
    let prompts = PromptSet::base();
    let t = run_session(
        &ScriptedBackend::new(Behavior::Refuser { nocall: None }),
        entry.qa_for(task),
        &entry.record,
        &set,
        &options(&prompts),
    );
    assert_eq!(t.terminal.name(), "NoCallStop");
    assert!(t.executed_chain.is_empty());
    assert_eq!(t.steps.len(), 1);
}

#[test]
fn clumsy_recovers_or_aborts() {
    let corpus = bundled_corpus();
    let entry = &corpus.entries[0];
    let task = TaskType::new(11).unwrap();
    let (set, _) = build_toolset(Condition::Baseline, 1, &entry.record, task).unwrap();
    let prompts = PromptSet::base();
    let backend = ScriptedBackend::new(Behavior::Clumsy { j: 2 });
    let t = run_session(&backend, entry.qa_for(task), &entry.record, &set, &options(&prompts));
    assert!(t.is_concluded());
    let errors: Vec<_> = t.steps.iter().filter(|s| matches!(s.outcome, StepOutcome::IoError { .. })).collect();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].index, 2);
    assert!(t.turns[3].request.starts_with("Execution failed: "));

    let mut opts = options(&prompts);
    opts.limits.abort_on_io_error = true;
    let t = run_session(&backend, entry.qa_for(task), &entry.record, &set, &opts);
    assert!(matches!(t.terminal, Terminal::IoAbort { error: IoErrorKind::CompulsoryOmitted }), "{:?}", t.terminal);
}

#[test]
fn deviant_swaps_tail_categories() {
    let corpus = bundled_corpus();
    let entry = &corpus.entries[3];
    let task = TaskType::new(11).unwrap();
    let (set, _) = build_toolset(Condition::Baseline, 4, &entry.record, task).unwrap();
    let prompts = PromptSet::base();
    let t = run_session(&ScriptedBackend::new(Behavior::Deviant { k: 1 }), entry.qa_for(task), &entry.record, &set, &options(&prompts));
    let expected = ground_truth_spec(task).linearizations().swap_remove(0);
    let got = t.executed_categories();
    assert_eq!(got.len(), expected.len());
    assert_eq!(got[..got.len() - 1], expected[..expected.len() - 1]);
    assert_ne!(got.last(), expected.last());
}

#[test]
fn iteration_cap_on_echo() {
    let corpus = bundled_corpus();
    let entry = &corpus.entries[2];
    let task = TaskType::new(1).unwrap();
    let (set, _) = build_toolset(Condition::Baseline, 4, &entry.record, task).unwrap();
    let prompts = PromptSet::base();
    let mut opts = options(&prompts);
    opts.limits.max_steps = Some(3);
    let t = run_session(&ScriptedBackend::new(Behavior::Echo), entry.qa_for(task), &entry.record, &set, &opts);
    assert_eq!(t.terminal, Terminal::IterationCap);
    assert_eq!(t.steps.len(), 3);
    assert!(t.plan_error.is_some());
}

#[test]
fn canned_replay_reproduces_the_transcript() {
    let corpus = bundled_corpus();
    let entry = &corpus.entries[5];
    let task = TaskType::new(8).unwrap();
    let (set, _) = build_toolset(Condition::RedundantMedium, 9, &entry.record, task).unwrap();
    let prompts = PromptSet::base();
    let first = run_session(&ScriptedBackend::new(Behavior::Oracle), entry.qa_for(task), &entry.record, &set, &options(&prompts));
    let canned = CannedBackend::new(first.backend.clone(), first.responses());
    let replay = run_session(&canned, entry.qa_for(task), &entry.record, &set, &options(&prompts));
    assert_eq!(first, replay);
}

#[test]
fn multi_agent_roles_hand_off() {
    let corpus = bundled_corpus();
    let entry = &corpus.entries[4];
    let task = TaskType::new(9).unwrap();
    let (set, _) = build_toolset(Condition::Baseline, 2, &entry.record, task).unwrap();
    let oracle = ScriptedBackend::new(Behavior::Oracle);
    let agents = Agents::Multi { planner: &oracle, executor: &oracle, concluder: &oracle };

    let base = PromptSet::base();
    let err = run_agents(agents, entry.qa_for(task), &entry.record, &set, &options(&base)).unwrap_err();
    assert!(matches!(err, SessionError::MissingRoleTemplates(_)));

    let refined = PromptSet::refined();
    let t = run_agents(agents, entry.qa_for(task), &entry.record, &set, &options(&refined)).unwrap();
    assert!(t.is_concluded());
    assert_eq!(t.plan.as_ref().unwrap().categories(), ground_truth_spec(task).linearizations().swap_remove(0));
    assert!(t.turns[1].request.starts_with("Known information: "));

    let garbage = CannedBackend::new("g", vec!["no plan".into(), "still none".into()]);
    let agents = Agents::Multi { planner: &garbage, executor: &oracle, concluder: &oracle };
    let err = run_agents(agents, entry.qa_for(task), &entry.record, &set, &options(&refined)).unwrap_err();
    assert!(matches!(err, SessionError::PlannerParse(_)));
}

#[test]
fn reflection_retry_is_sent_once() {
    let corpus = bundled_corpus();
    let entry = &corpus.entries[0];
    let task = TaskType::new(1).unwrap();
    let (set, _) = build_toolset(Condition::Baseline, 2, &entry.record, task).unwrap();
    let prompts = PromptSet::base();
    let oracle = ScriptedBackend::new(Behavior::Oracle);
    let reference = run_session(&oracle, entry.qa_for(task), &entry.record, &set, &options(&prompts));
    let step = reference.steps[0].response.clone();
    assert!(matches!(parse_protocol(&step), ProtocolMessage::EndCall(_) | ProtocolMessage::Call(_)));
    let canned = CannedBackend::new(
        "c",
        vec![reference.turns[0].response.clone(), step.clone(), step.clone(), reference.turns.last().unwrap().response.clone()],
    );
    let mut opts = options(&prompts);
    opts.reflection_check = Some(|r: &str| r.contains("<Reflection>"));
    let t = run_session(&canned, entry.qa_for(task), &entry.record, &set, &opts);
    assert_eq!(t.steps[0].reflection_ok, Some(false));
    assert_eq!(t.turns.len(), 4);
}
