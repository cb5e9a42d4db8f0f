//! Chain, outcome and text metrics over session transcripts, per-session
//! metric rows, their aggregation, and paired comparisons.

mod chain;
mod outcome;
mod paired;
mod text;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{ground_truth_spec, PatientRecord, QaPair};
use crate::engine::{StepOutcome, Transcript};
use crate::toolset_sim::{Condition, GroundTruthGap, ToolSet};

pub use chain::{fdr, levenshtein, levenshtein_chain, ots_mean, ots_score, ots_step, ots_steps, tma};
pub use outcome::{
    completion_from_flags, ecr_pfsp, grounding_matches, refusal, task_completion, thr_mhr, unsolvability_assess,
    Unsolvability,
};
pub use paired::{paired_compare, Direction, PairedError, PairedResult};
pub use text::{text_metrics, tokenize, EmptyText, TextScores};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub levenshtein: usize,
    pub fdr: f64,
    pub tma: f64,
    /// The executed chain was empty; FDR and TMA hold their worst values.
    pub degenerate_chain: bool,
    /// Planned chain against the ground truth, when a plan was parsed.
    pub plan_levenshtein: Option<usize>,
    /// Planned chain against the executed chain.
    pub plan_execution_levenshtein: Option<usize>,
    pub ots: f64,
    pub ecr: bool,
    pub pfsp: Option<f64>,
    pub thr: bool,
    pub mhr: bool,
    pub uar: Option<bool>,
    pub ugr: Option<bool>,
    pub false_refusal: bool,
    pub completion: bool,
    pub io_errors: usize,
    pub steps: usize,
    pub build_attempted: bool,
    pub build_success: bool,
    pub bleu: Option<f64>,
    pub rouge: Option<f64>,
    pub f1: Option<f64>,
    pub total_tokens: usize,
    pub peak_context_tokens: usize,
}

impl MetricValues {
    /// Every metric as a number (flags as 0/1), in a fixed order.
    pub fn numeric(&self) -> Vec<(&'static str, Option<f64>)> {
        let flag = |b: bool| Some(if b { 1.0 } else { 0.0 });
        vec![
            ("completion", flag(self.completion)),
            ("levenshtein", Some(self.levenshtein as f64)),
            ("fdr", Some(self.fdr)),
            ("tma", Some(self.tma)),
            ("plan_levenshtein", self.plan_levenshtein.map(|v| v as f64)),
            ("plan_execution_levenshtein", self.plan_execution_levenshtein.map(|v| v as f64)),
            ("ots", Some(self.ots)),
            ("ecr", flag(self.ecr)),
            ("pfsp", self.pfsp),
            ("thr", flag(self.thr)),
            ("mhr", flag(self.mhr)),
            ("uar", self.uar.and_then(flag)),
            ("ugr", self.ugr.and_then(flag)),
            ("false_refusal", flag(self.false_refusal)),
            ("degenerate_chain", flag(self.degenerate_chain)),
            ("io_errors", Some(self.io_errors as f64)),
            ("steps", Some(self.steps as f64)),
            ("build_attempted", flag(self.build_attempted)),
            ("build_success", flag(self.build_success)),
            ("bleu", self.bleu),
            ("rouge", self.rouge),
            ("f1", self.f1),
            ("total_tokens", Some(self.total_tokens as f64)),
            ("peak_context_tokens", Some(self.peak_context_tokens as f64)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub qa_id: String,
    pub record_id: String,
    pub task: u8,
    pub complexity: String,
    pub condition: Condition,
    pub seed: u64,
    pub backend: String,
    pub strategy: String,
    pub terminal: String,
    pub values: MetricValues,
    /// OTS of each contested selection.
    pub ots_steps: Vec<f64>,
    /// Tokens sent and received per agent role.
    pub role_tokens: IndexMap<String, usize>,
}

/// Score one session. `toolset` is the set the session started with.
pub fn compute_metrics(
    transcript: &Transcript,
    qa: &QaPair,
    record: &PatientRecord,
    toolset: &ToolSet,
    gap: Option<&GroundTruthGap>,
) -> MetricRow {
    let spec = ground_truth_spec(transcript.task);
    let executed = transcript.executed_categories();
    let plan = transcript.plan.as_ref().map(|p| p.categories());
    let (ecr, pfsp) = ecr_pfsp(transcript, &spec);
    let (thr, mhr) = thr_mhr(transcript, &spec);
    let u = unsolvability_assess(transcript, gap);
    let ots_list = ots_steps(transcript, toolset, record);
    let text = match &transcript.terminal {
        crate::engine::Terminal::Concluded { answer } => text_metrics(answer, &qa.answer).ok(),
        _ => None,
    };
    let mut role_tokens: IndexMap<String, usize> = IndexMap::new();
    for t in &transcript.turns {
        *role_tokens.entry(t.role.name().to_string()).or_default() += t.context_tokens + t.response_tokens;
    }
    let values = MetricValues {
        levenshtein: levenshtein_chain(&executed, &spec),
        fdr: fdr(&executed, &spec),
        tma: tma(&executed, &spec),
        degenerate_chain: executed.is_empty(),
        plan_levenshtein: plan.as_ref().map(|p| levenshtein_chain(p, &spec)),
        plan_execution_levenshtein: plan.as_ref().map(|p| levenshtein(p, &executed)),
        ots: ots_mean(&ots_list),
        ecr,
        pfsp,
        thr,
        mhr,
        uar: u.uar,
        ugr: u.ugr,
        false_refusal: u.false_refusal,
        completion: task_completion(transcript, &spec, gap),
        io_errors: transcript.steps.iter().filter(|s| matches!(s.outcome, StepOutcome::IoError { .. })).count(),
        steps: transcript.steps.len(),
        build_attempted: transcript.build.is_some(),
        build_success: transcript.build.as_ref().is_some_and(|b| b.success),
        bleu: text.map(|t| t.bleu),
        rouge: text.map(|t| t.rouge),
        f1: text.map(|t| t.f1),
        total_tokens: transcript.total_tokens(),
        peak_context_tokens: transcript.peak_context_tokens(),
    };
    MetricRow {
        qa_id: transcript.qa_id.clone(),
        record_id: transcript.record_id.clone(),
        task: transcript.task.number(),
        complexity: spec.complexity.name().to_string(),
        condition: transcript.condition,
        seed: transcript.seed,
        backend: transcript.backend.clone(),
        strategy: transcript.strategy.clone(),
        terminal: transcript.terminal.name().to_string(),
        values,
        ots_steps: ots_list,
        role_tokens,
    }
}

/// Running sums per metric. Merging is associative, so rows can be
/// reduced in any grouping.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: usize,
    /// Metric name to (sum, count of rows where the metric is defined).
    pub sums: IndexMap<String, (f64, usize)>,
}

impl Aggregate {
    pub fn add(&mut self, values: &MetricValues) {
        self.rows += 1;
        for (name, v) in values.numeric() {
            let e = self.sums.entry(name.to_string()).or_insert((0.0, 0));
            if let Some(v) = v {
                e.0 += v;
                e.1 += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &Aggregate) {
        self.rows += other.rows;
        for (name, (sum, count)) in &other.sums {
            let e = self.sums.entry(name.clone()).or_insert((0.0, 0));
            e.0 += sum;
            e.1 += count;
        }
    }

    /// Mean of each metric over the rows where it is defined.
    pub fn means(&self) -> IndexMap<String, Option<f64>> {
        self.sums
            .iter()
            .map(|(k, (sum, n))| (k.clone(), (*n > 0).then(|| sum / *n as f64)))
            .collect()
    }
}
