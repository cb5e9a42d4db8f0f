//! Run configuration, batch execution with resume, persistence, reports
//! and replay.

mod config;
mod report;
mod run;

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{leakage_terms, Corpus, TaskType};
use crate::toolset_sim::{build_toolset, Condition, GroundTruthGap};

pub use config::{load_config, parse_config, BackendSpec, ConfigError, RunConfig};
pub use report::{
    done_rows, emit_report, summarize, CellCounts, GroupRow, PairedRow, ReportError, Summary, TokenRow, AGGREGATES,
    PAIRED, PAIRED_METRICS, SUMMARY, TOKENS,
};
pub use run::{
    enumerate_cells, load_run_corpus, read_metrics, read_transcripts, replay, replay_dir, run_benchmark,
    strategy_prompts, Cell, CellEntry, CellStatus, HarnessError, MetricLine, ReplayReport, RunManifest,
    TranscriptLine, MANIFEST, METRICS, TRANSCRIPTS,
};

/// Problems found in a corpus: QA questions that name the record's
/// anatomy, modality or disease.
pub fn validate_data(corpus: &Corpus) -> Vec<String> {
    let mut issues = Vec::new();
    for entry in &corpus.entries {
        for qa in &entry.qa {
            let leaked = leakage_terms(&qa.question, &entry.record);
            if !leaked.is_empty() {
                issues.push(format!("{}: question leaks {}", qa.id(), leaked.join(", ")));
            }
        }
    }
    issues
}

#[derive(Serialize)]
struct ToolsetFile<'a> {
    record_id: &'a str,
    task: u8,
    condition: Condition,
    seed: u64,
    gap: Option<GroundTruthGap>,
    tools: indexmap::IndexMap<String, crate::tools::ToolCardJson>,
}

/// Write `<out>/<record>/<condition>/t<task>_s<seed>.json` for every
/// combination and return the number of files written.
pub fn gen_toolsets(
    corpus: &Corpus,
    conditions: &[Condition],
    tasks: &[TaskType],
    seeds: &[u64],
    out: &Path,
) -> Result<usize, HarnessError> {
    let mut written = 0;
    for entry in &corpus.entries {
        for &condition in conditions {
            let dir = out.join(&entry.record.record_id).join(condition.name());
            fs::create_dir_all(&dir)
                .map_err(|e| HarnessError::Io { path: dir.display().to_string(), message: e.to_string() })?;
            for &task in tasks {
                for &seed in seeds {
                    let (set, gap) = build_toolset(condition, seed, &entry.record, task)
                        .map_err(|e| HarnessError::Io { path: dir.display().to_string(), message: e.to_string() })?;
                    let file = ToolsetFile {
                        record_id: &entry.record.record_id,
                        task: task.number(),
                        condition,
                        seed,
                        gap,
                        tools: set.to_json_map(),
                    };
                    let path = dir.join(format!("t{:02}_s{seed}.json", task.number()));
                    let text = serde_json::to_string_pretty(&file).expect("tool set serializes") + "\n";
                    fs::write(&path, text)
                        .map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() })?;
                    written += 1;
                }
            }
        }
    }
    Ok(written)
}
