//! One PASS/FAIL/SKIP line per acceptance criterion; the test fails if any
//! criterion fails.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radbench::corpus::{bundled_corpus, ground_truth_spec, ChainSlot, ChainStep, Corpus, TaskSpec, TaskType};
use radbench::engine::{
    parse_decomposition, parse_protocol, run_session, Behavior, CannedBackend, Limits, PromptSet, ProtocolMessage,
    ScriptedBackend, SessionOptions,
};
use radbench::harness::{emit_report, load_config, parse_config, replay, run_benchmark, RunConfig};
use radbench::metrics::{compute_metrics, levenshtein, levenshtein_chain, ots_score, text_metrics, unsolvability_assess};
use radbench::strategies::{
    augment_prompt_set, session_options, validate_reflection, BuilderPolicy, SimulatedBuilder, StrategyConfig,
    StrategyFlags,
};
use radbench::tools::ToolCategory;
use radbench::toolset_sim::{build_toolset, solvability_oracle, Condition, GapKind, GroundTruthGap};

const SEEDS: u64 = 1000;
const LIVE_ENV: &str = "RADBENCH_LIVE_CONFIG";

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/responses").join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn options(prompts: &PromptSet) -> SessionOptions<'_> {
    SessionOptions { prompts, strategy: "base".into(), limits: Limits::default(), reflection_check: None, builder: None }
}

fn task(n: u8) -> TaskType {
    TaskType::new(n).unwrap()
}

fn within(elapsed: Duration, budget: Duration) -> Outcome {
    if elapsed < budget {
        Ok(format!("{:.2}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("took {:.2}s, budget {}s", elapsed.as_secs_f64(), budget.as_secs()))
    }
}

fn sizes(corpus: &Corpus) -> Outcome {
    let start = Instant::now();
    let mut cells = 0usize;
    for condition in Condition::ALL {
        let (lo, hi) = condition.size_bounds();
        for entry in &corpus.entries {
            for t in TaskType::all() {
                for seed in 0..SEEDS {
                    let (set, _) = build_toolset(condition, seed, &entry.record, t).map_err(|e| e.to_string())?;
                    ensure!(
                        (lo..=hi).contains(&set.len()),
                        "{condition:?} {} {t:?} seed {seed}: {} tools outside {lo}..={hi}",
                        entry.record.record_id,
                        set.len()
                    );
                    cells += 1;
                }
            }
        }
    }
    let time = within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{cells} sets, 0 violations, {time}"))
}

fn solvability(corpus: &Corpus) -> Outcome {
    let mut checked = 0usize;
    for condition in Condition::ALL {
        for entry in &corpus.entries {
            for t in TaskType::all() {
                for seed in 0..SEEDS {
                    let (set, gap) = build_toolset(condition, seed, &entry.record, t).map_err(|e| e.to_string())?;
                    let verdict = solvability_oracle(&set, &entry.record, t).map_err(|e| e.to_string())?;
                    let at = || format!("{condition:?} {} {t:?} seed {seed}", entry.record.record_id);
                    ensure!(verdict.solvable != condition.is_insufficient(), "{}: solvable = {}", at(), verdict.solvable);
                    if condition.is_insufficient() {
                        let (gap, found) = (gap.expect("insufficient sets carry a gap"), verdict.blocking_gap);
                        let found = found.ok_or_else(|| format!("{}: no blocking gap", at()))?;
                        ensure!(
                            found.kind == gap.kind && found.category == gap.category,
                            "{}: oracle {:?}/{:?}, generator {:?}/{:?}",
                            at(),
                            found.kind,
                            found.category,
                            gap.kind,
                            gap.category
                        );
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} sets classified, gaps agree"))
}

fn oracle_end_to_end(corpus: &Corpus) -> Outcome {
    let start = Instant::now();
    let prompts = PromptSet::base();
    let backend = ScriptedBackend::new(Behavior::Oracle);
    let mut completed = 0;
    for entry in &corpus.entries {
        for t in TaskType::all() {
            let (set, gap) = build_toolset(Condition::Baseline, 0, &entry.record, t).map_err(|e| e.to_string())?;
            let qa = entry.qa_for(t);
            let tr = run_session(&backend, qa, &entry.record, &set, &options(&prompts));
            let v = compute_metrics(&tr, qa, &entry.record, &set, gap.as_ref()).values;
            ensure!(
                v.levenshtein == 0 && v.fdr == 0.0 && v.tma == 1.0 && v.ecr && v.thr && v.ots == 1.0,
                "{} {t:?}: {v:?}",
                entry.record.record_id
            );
            completed += usize::from(v.completion);
        }
    }
    ensure!(completed == 66, "completion {completed}/66");
    let time = within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("completion 66/66, chain metrics exact, {time}"))
}

fn fault_injection(corpus: &Corpus) -> Outcome {
    let prompts = PromptSet::base();
    let mut sessions = 0;
    for entry in &corpus.entries {
        for t in TaskType::all() {
            let (set, gap) = build_toolset(Condition::Baseline, 1, &entry.record, t).map_err(|e| e.to_string())?;
            let qa = entry.qa_for(t);
            let lin = ground_truth_spec(t).linear_len();
            let at = || format!("{} {t:?}", entry.record.record_id);
            let score = |b: Behavior| {
                let tr = run_session(&ScriptedBackend::new(b), qa, &entry.record, &set, &options(&prompts));
                compute_metrics(&tr, qa, &entry.record, &set, gap.as_ref()).values
            };
            for j in 1..=lin {
                let v = score(Behavior::Clumsy { j });
                let expected = (j - 1) as f64 / lin as f64;
                ensure!(!v.ecr && v.pfsp == Some(expected), "{} clumsy({j}): ecr {} pfsp {:?}, want {expected}", at(), v.ecr, v.pfsp);
                sessions += 1;
            }
            let v = score(Behavior::Deviant { k: 1 });
            let expected = (lin - 1) as f64 / lin as f64;
            ensure!(v.levenshtein == 1 && v.tma == expected, "{} deviant(1): lev {} tma {}", at(), v.levenshtein, v.tma);
            let v = score(Behavior::Refuser { nocall: None });
            ensure!(v.false_refusal && !v.completion, "{} refuser: {v:?}", at());
            sessions += 2;
        }
    }
    Ok(format!("{sessions} faulted sessions exact"))
}

/// Top-down memoized edit distance, written independently of the library's
/// row-based version.
fn edit_oracle(a: &[ToolCategory], b: &[ToolCategory]) -> usize {
    fn go(a: &[ToolCategory], b: &[ToolCategory], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let d = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo).min(go(a, b, i, j + 1, memo)).min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// All orderings of a chain whose steps hold one or two slots.
fn orderings(chain: &[ChainStep]) -> Vec<Vec<ToolCategory>> {
    let Some((first, rest)) = chain.split_first() else {
        return vec![Vec::new()];
    };
    let heads: Vec<Vec<ToolCategory>> = match first.slots.as_slice() {
        [a] => vec![vec![a.category]],
        [a, b] => vec![vec![a.category, b.category], vec![b.category, a.category]],
        _ => unreachable!("generated steps hold one or two slots"),
    };
    let tails = orderings(rest);
    heads.iter().flat_map(|h| tails.iter().map(move |t| [h.clone(), t.clone()].concat())).collect()
}

fn random_categories(rng: &mut ChaCha8Rng, max: usize) -> Vec<ToolCategory> {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| ToolCategory::ALL[rng.random_range(0..ToolCategory::ALL.len())]).collect()
}

fn metric_units() -> Outcome {
    ensure!(ots_score(4, 2) == 0.75, "OTS(4, 2) = {}", ots_score(4, 2));
    let text = "Mild mucosal thickening of the left maxillary sinus.";
    let same = text_metrics(text, text).map_err(|e| e.to_string())?;
    ensure!((same.bleu, same.rouge, same.f1) == (1.0, 1.0, 1.0), "identity {same:?}");
    let apart = text_metrics("alpha beta gamma delta", "one two three four").map_err(|e| e.to_string())?;
    ensure!((apart.bleu, apart.rouge, apart.f1) == (0.0, 0.0, 0.0), "disjoint {apart:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let template = ground_truth_spec(task(1));
    for i in 0..10_000 {
        let pred = random_categories(&mut rng, 10);
        let mut chain = Vec::new();
        let mut len = 0;
        let target = rng.random_range(1..=10);
        while len < target {
            let width = if target - len >= 2 && rng.random_bool(0.3) { 2 } else { 1 };
            let slots = (0..width).map(|_| ChainSlot::plain(ToolCategory::ALL[rng.random_range(0..ToolCategory::ALL.len())]));
            chain.push(ChainStep { slots: slots.collect() });
            len += width;
        }
        let want = orderings(&chain).iter().map(|lin| edit_oracle(&pred, lin)).min().unwrap();
        let spec = TaskSpec { gt_chain: chain, ..template.clone() };
        let got = levenshtein_chain(&pred, &spec);
        ensure!(got == want, "pair {i}: {pred:?} vs {:?}: got {got}, oracle {want}", spec.gt_chain);
        let other = random_categories(&mut rng, 10);
        ensure!(levenshtein(&pred, &other) == edit_oracle(&pred, &other), "plain pair {i}: {pred:?} {other:?}");
    }
    Ok("OTS 0.75, text (1,1,1)/(0,0,0), 10000 chain pairs agree with the oracle".into())
}

fn nocall_scoring(corpus: &Corpus) -> Outcome {
    let entry = corpus.get("head-and-neck__x-ray__sinusitis").ok_or("missing head-and-neck x-ray record")?;
    let t = task(7);
    let wanted = |g: &GroundTruthGap| g.category == ToolCategory::AnomalyDetector;
    let (seed, set, gap) = (0..200)
        .find_map(|seed| match build_toolset(Condition::InsufficientConfig2, seed, &entry.record, t) {
            Ok((set, Some(gap))) if wanted(&gap) => Some((seed, set, gap)),
            _ => None,
        })
        .ok_or("no Config2 set withholds the anomaly detector")?;
    ensure!(gap.kind == GapKind::SpecificToolMissing, "gap kind {:?}", gap.kind);

    let prompts = PromptSet::base();
    let step4 = fixture("single_agent/step4.txt");
    let score = |response: &str| {
        let responses = vec![
            fixture("single_agent/plan.txt"),
            fixture("single_agent/step1.txt"),
            fixture("single_agent/step2.txt"),
            response.to_string(),
        ];
        let tr = run_session(&CannedBackend::new("case", responses), entry.qa_for(t), &entry.record, &set, &options(&prompts));
        let u = unsolvability_assess(&tr, Some(&gap));
        (tr.terminal.name(), u.uar, u.ugr)
    };
    let got = score(&step4);
    ensure!(got == ("NoCallStop", Some(true), Some(true)), "case block scored {got:?}");
    let mismatched = [
        step4.replace("SpecificToolMissing", "CategoryMissing"),
        step4.replace("SpecificToolMissing", "InsufficientCapability"),
        step4.replace("<Category>Anomaly Detector", "<Category>Organ Segmentor"),
        step4.replace("<Modality>X-ray", "<Modality>CT"),
    ];
    for m in &mismatched {
        let got = score(m);
        ensure!(got == ("NoCallStop", Some(true), Some(false)), "mismatched block scored {got:?}:\n{m}");
    }
    Ok(format!("case block (true, true) on seed {seed}; {} mismatches (true, false)", mismatched.len()))
}

fn auto_build(corpus: &Corpus) -> Outcome {
    let config = StrategyConfig {
        flags: StrategyFlags { auto_build: true, ..Default::default() },
        prompt_set: String::new(),
        builder_policy: BuilderPolicy::ExactMatch,
    };
    let prompts = augment_prompt_set(&PromptSet::base(), config.flags);
    let grounded = ScriptedBackend::new(Behavior::Oracle);
    let wrong = ScriptedBackend::new(Behavior::Misgrounded);
    let (mut cells, mut good, mut bad) = (0, 0, 0);
    for condition in [Condition::InsufficientConfig1, Condition::InsufficientConfig2] {
        for entry in &corpus.entries {
            for t in TaskType::all() {
                for seed in 0..3 {
                    let (set, gap) = build_toolset(condition, seed, &entry.record, t).map_err(|e| e.to_string())?;
                    let builder = SimulatedBuilder { gap: gap.clone(), policy: config.builder_policy };
                    let opts = session_options(&config, &prompts, Limits::default(), Some(&builder));
                    let qa = entry.qa_for(t);
                    for (backend, tally) in [(&grounded, &mut good), (&wrong, &mut bad)] {
                        let tr = run_session(backend, qa, &entry.record, &set, &opts);
                        let v = compute_metrics(&tr, qa, &entry.record, &set, gap.as_ref()).values;
                        ensure!(v.build_attempted, "{condition:?} {} {t:?}: no build request", entry.record.record_id);
                        *tally += usize::from(v.completion);
                    }
                    cells += 1;
                }
            }
        }
    }
    ensure!(good == cells && bad == 0, "grounded {good}/{cells}, wrong category {bad}/{cells}");
    Ok(format!("grounded requests {good}/{cells}, wrong-category requests {bad}/{cells}"))
}

fn is_call(m: &ProtocolMessage, tool: &str) -> bool {
    matches!(m, ProtocolMessage::Call(c) if c.tool == tool)
}

fn is_nocall(m: &ProtocolMessage, category: ToolCategory) -> bool {
    matches!(m, ProtocolMessage::NoCall(n) if n.category == category && n.ability == GapKind::SpecificToolMissing)
}

const FUZZ_PIECES: &[&str] = &[
    "<", ">", "</", "/>", "Call", "NoCal", "EndCal", "<Call", "</Call>", "</NoCall>", "<Tool>", "</Tool>",
    "<Purpose>", "</Purpose>", "<Input>", "</Input>", "<Category>", "Anomaly Detector", "<Ability>", "Reflection",
    "<Reflection", "</Reflection>", "['$Image$']", "$Anatomy$", "TOOL1", "```xml", "```", "\n", " ", "    ", "é",
    "→", "\u{0}", "{", "}", "[", "]", "'", "\"",
];

fn fuzz_text(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    for _ in 0..rng.random_range(0..40) {
        if rng.random_bool(0.3) {
            s.push(char::from(rng.random_range(0x20u8..0x7f)));
        } else {
            s.push_str(FUZZ_PIECES[rng.random_range(0..FUZZ_PIECES.len())]);
        }
    }
    s
}

fn parser_robustness() -> Outcome {
    use ToolCategory::*;
    let single: Vec<ProtocolMessage> = (1..=4).map(|n| parse_protocol(&fixture(&format!("single_agent/step{n}.txt")))).collect();
    ensure!(
        is_call(&single[0], "TOOL1") && is_call(&single[1], "TOOL2") && is_call(&single[2], "TOOL8")
            && is_nocall(&single[3], AnomalyDetector),
        "single-agent steps parsed as {single:?}"
    );
    let multi: Vec<String> = (1..=4).map(|n| fixture(&format!("multi_agent/step{n}.txt"))).collect();
    let parsed: Vec<ProtocolMessage> = multi.iter().map(|r| parse_protocol(r)).collect();
    ensure!(
        is_call(&parsed[0], "TOOL1") && is_call(&parsed[1], "TOOL2") && is_nocall(&parsed[2], OrganSegmentor)
            && is_call(&parsed[3], "TOOL5"),
        "multi-agent steps parsed as {parsed:?}"
    );
    ensure!(multi.iter().all(|r| validate_reflection(r)), "a multi-agent step fails the reflection check");
    let plan = parse_decomposition(&fixture("single_agent/plan.txt")).map_err(|e| e.to_string())?;
    ensure!(
        plan.categories() == [AnatomyClassifier, ModalityClassifier, AnomalyDetector, BiomarkerQuantifier],
        "single-agent plan {:?}",
        plan.categories()
    );
    let plan = parse_decomposition(&fixture("multi_agent/plan.txt")).map_err(|e| e.to_string())?;
    ensure!(
        plan.categories() == [AnatomyClassifier, ModalityClassifier, OrganSegmentor, AnomalyDetector],
        "multi-agent plan {:?}",
        plan.categories()
    );
    let conclusion = fixture("multi_agent/conclusion.txt");
    ensure!(matches!(parse_protocol(&conclusion), ProtocolMessage::ParseFailure { .. }), "conclusion parsed as a block");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut fuzzed = 0;
    while fuzzed < 100_000 {
        let text = fuzz_text(&mut rng);
        if text.contains("Call>") || text.contains("<Reflection>") {
            continue;
        }
        let got = catch_unwind(|| parse_protocol(&text)).map_err(|_| format!("parser panicked on {text:?}"))?;
        ensure!(matches!(got, ProtocolMessage::ParseFailure { .. }), "{text:?} parsed as {got:?}");
        fuzzed += 1;
    }
    // Mutated case texts may parse to anything but must not panic.
    let corpus: Vec<String> = multi.iter().cloned().chain((1..=4).map(|n| fixture(&format!("single_agent/step{n}.txt")))).collect();
    for _ in 0..20_000 {
        let mut chars: Vec<char> = corpus[rng.random_range(0..corpus.len())].chars().collect();
        for _ in 0..rng.random_range(1..6) {
            let i = rng.random_range(0..chars.len());
            match rng.random_range(0..3) {
                0 => {
                    chars.remove(i);
                }
                1 => chars.insert(i, ['<', '>', '/', 'x', '\n'][rng.random_range(0..5)]),
                _ => {
                    let k = rng.random_range(0..chars.len());
                    chars.swap(i, k);
                }
            }
        }
        let text: String = chars.into_iter().collect();
        catch_unwind(|| parse_protocol(&text)).map_err(|_| format!("parser panicked on {text:?}"))?;
    }
    Ok("10 case texts parse as documented; 100000 fuzzed inputs all ParseFailure, no panics".into())
}

const RUN_CONFIG: &str = r#"
output_dir = "out"
conditions = ["Baseline", "RedundantMedium", "InsufficientConfig2", "Differentiated"]
seeds = [0, 1]
workers = 4

[[backends]]
label = "oracle"
kind = "scripted"
behavior = "oracle"

[[backends]]
label = "clumsy"
kind = "scripted"
behavior = "clumsy:2"

[[strategies]]

[[strategies]]
self_reflection = true
few_shot = true
auto_build = true
"#;

fn run_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn run_in(config: &RunConfig, dir: PathBuf) -> Result<Vec<(String, Vec<u8>)>, String> {
    let config = RunConfig { output_dir: dir.clone(), ..config.clone() };
    let manifest = run_benchmark(&config).map_err(|e| e.to_string())?;
    ensure!(manifest.failed() == 0, "{} failed cells", manifest.failed());
    emit_report(&dir).map_err(|e| e.to_string())?;
    Ok(run_files(&dir))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = parse_config(RUN_CONFIG).map_err(|e| e.to_string())?;
    let first = run_in(&config, tmp.path().join("a"))?;
    let second = run_in(&config, tmp.path().join("b"))?;
    ensure!(first.len() == 7, "expected 7 run files, found {:?}", first.iter().map(|f| &f.0).collect::<Vec<_>>());
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        ensure!(a == b, "{name} differs between runs");
    }
    let report = replay(&RunConfig { output_dir: tmp.path().join("a"), ..config.clone() }).map_err(|e| e.to_string())?;
    ensure!(report.is_exact(), "replay mismatches: {:?} {:?}", report.transcript_mismatches, report.metric_mismatches);
    Ok(format!("{} files byte-identical; {} sessions replayed exactly", first.len(), report.sessions))
}

/// Runs only when the named config file is provided.
fn live_smoke() -> Option<Outcome> {
    let path = std::env::var_os(LIVE_ENV)?;
    Some((|| {
        let config = load_config(Path::new(&path)).map_err(|e| e.to_string())?;
        ensure!(config.backends.iter().any(|b| b.max_parallelism() != usize::MAX), "{LIVE_ENV} names no live backend");
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = RunConfig {
            conditions: vec![Condition::Baseline],
            output_dir: tmp.path().to_path_buf(),
            resume: false,
            max_cells: Some(5),
            ..config
        };
        let manifest = run_benchmark(&config).map_err(|e| e.to_string())?;
        ensure!(manifest.cells.len() == 5, "{} cells enumerated", manifest.cells.len());
        let paths = emit_report(tmp.path()).map_err(|e| e.to_string())?;
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&paths[0]).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure!(summary.get("cells").is_some(), "summary lacks cell counts");
        Ok(format!("{} done, {} failed, report written", manifest.done(), manifest.failed()))
    })())
}

/// Written past the test harness's output capture so the lines show in a
/// plain `cargo test` run.
fn line(text: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

#[test]
fn acceptance() {
    let corpus = bundled_corpus();
    let criteria: [(&str, Box<dyn Fn() -> Option<Outcome>>); 10] = [
        ("tool-set size bounds", Box::new(|| Some(sizes(&corpus)))),
        ("solvability soundness", Box::new(|| Some(solvability(&corpus)))),
        ("oracle end to end", Box::new(|| Some(oracle_end_to_end(&corpus)))),
        ("fault injection", Box::new(|| Some(fault_injection(&corpus)))),
        ("metric units", Box::new(|| Some(metric_units()))),
        ("unsolvability scoring", Box::new(|| Some(nocall_scoring(&corpus)))),
        ("auto-build recovery", Box::new(|| Some(auto_build(&corpus)))),
        ("protocol parser robustness", Box::new(|| Some(parser_robustness()))),
        ("determinism and replay", Box::new(|| Some(determinism()))),
        ("live smoke run", Box::new(live_smoke)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Some(Err(format!("panicked: {}", msg.unwrap_or_default())))
        });
        match outcome {
            Some(Ok(detail)) => line(format!("criterion {n:2} PASS  {name}: {detail}")),
            Some(Err(why)) => {
                line(format!("criterion {n:2} FAIL  {name}: {why}"));
                failed.push(n);
            }
            None => line(format!("criterion {n:2} SKIP  {name}: set {LIVE_ENV} to a config with a live backend")),
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
