use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use super::config::{ConfigError, RunConfig};
use crate::corpus::{bundled_corpus, load_corpus_dir, Corpus, TaskType};
use crate::engine::{run_session, Backend, CannedBackend, PromptSet, Terminal, Transcript};
use crate::metrics::{compute_metrics, MetricRow};
use crate::strategies::{
    augment_prompt_set, run_multi_agent, session_options, PromptRegistry, RoleBackends, SimulatedBuilder,
    StrategyConfig,
};
use crate::toolset_sim::{build_toolset, keyed_u64, Condition};

pub const TRANSCRIPTS: &str = "transcripts.jsonl";
pub const METRICS: &str = "metrics.jsonl";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path} line {line}: {message}")]
    Format { path: String, line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// One (record, task, condition, trial seed, backend, strategy) unit of work.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub record_id: String,
    pub task: TaskType,
    pub condition: Condition,
    pub seed: u64,
    pub backend: String,
    pub strategy: String,
}

impl Cell {
    pub fn id(&self) -> String {
        format!(
            "{}|t{}|{}|s{}|{}|{}",
            self.record_id,
            self.task.number(),
            self.condition.name(),
            self.seed,
            self.backend,
            self.strategy
        )
    }

    /// Tool-set seed, independent of backend and strategy so that every
    /// agent sees the same set for a given trial.
    pub fn toolset_seed(&self) -> u64 {
        keyed_u64(&["cell", &self.seed.to_string(), &self.record_id, &self.task.number().to_string(), self.condition.name()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellStatus {
    Pending,
    Done,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEntry {
    pub id: String,
    pub cell: Cell,
    #[serde(flatten)]
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub cells: Vec<CellEntry>,
}

impl RunManifest {
    pub fn count(&self, pred: impl Fn(&CellStatus) -> bool) -> usize {
        self.cells.iter().filter(|c| pred(&c.status)).count()
    }

    pub fn done(&self) -> usize {
        self.count(|s| *s == CellStatus::Done)
    }

    pub fn failed(&self) -> usize {
        self.count(|s| matches!(s, CellStatus::Failed { .. }))
    }

    pub fn load(dir: &Path) -> Result<RunManifest, HarnessError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Format { path: path.display().to_string(), line: e.line(), message: e.to_string() })
    }

    fn save(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(MANIFEST);
        let tmp = dir.join(format!("{MANIFEST}.tmp"));
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

/// One persisted session, with what is needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub cell_id: String,
    pub cell: Cell,
    pub strategy_config: StrategyConfig,
    pub transcript: Transcript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricLine {
    pub cell_id: String,
    #[serde(flatten)]
    pub row: MetricRow,
}

pub fn load_run_corpus(config: &RunConfig) -> Result<Corpus, HarnessError> {
    let mut corpus = match &config.corpus_dir {
        None => bundled_corpus(),
        Some(dir) => load_corpus_dir(dir)
            .map_err(|e| HarnessError::Io { path: dir.display().to_string(), message: e.to_string() })?,
    };
    if !config.records.is_empty() {
        for r in &config.records {
            if corpus.get(r).is_none() {
                return Err(ConfigError::BadEnum { key: "records".into(), value: r.clone() }.into());
            }
        }
        corpus.entries.retain(|e| config.records.contains(&e.record.record_id));
    }
    Ok(corpus)
}

/// Every cell of the run, in a fixed order, capped at `max_cells`.
pub fn enumerate_cells(config: &RunConfig, corpus: &Corpus) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &seed in &config.seeds {
        for &condition in &config.conditions {
            for entry in &corpus.entries {
                for &task in &config.tasks {
                    for backend in &config.backends {
                        for strategy in &config.strategies {
                            cells.push(Cell {
                                record_id: entry.record.record_id.clone(),
                                task,
                                condition,
                                seed,
                                backend: backend.label().to_string(),
                                strategy: strategy.label(),
                            });
                        }
                    }
                }
            }
        }
    }
    if let Some(max) = config.max_cells {
        cells.truncate(max);
    }
    cells
}

/// Prompt sets with overlays applied, one per strategy.
pub fn strategy_prompts(config: &RunConfig) -> Result<Vec<(StrategyConfig, PromptSet)>, HarnessError> {
    let registry = match &config.prompt_registry {
        Some(dir) => PromptRegistry::open(dir).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        None => PromptRegistry::in_memory(),
    };
    config
        .strategies
        .iter()
        .map(|s| {
            let set = registry
                .get(s.prompt_version())
                .map_err(|_| ConfigError::BadEnum { key: "prompt_set".into(), value: s.prompt_version().into() })?;
            if s.flags.multi_agent && !set.has_roles() {
                return Err(ConfigError::Invalid(format!(
                    "prompt set `{}` has no role templates for a multi-agent strategy",
                    set.version
                ))
                .into());
            }
            Ok((s.clone(), augment_prompt_set(set, s.flags)))
        })
        .collect()
}

struct CellContext<'a> {
    config: &'a RunConfig,
    corpus: &'a Corpus,
    backends: HashMap<String, &'a dyn Backend>,
    strategies: HashMap<String, &'a (StrategyConfig, PromptSet)>,
}

/// Run one cell. A backend failure is a cell failure.
fn run_cell(cell: &Cell, ctx: &CellContext<'_>) -> Result<(TranscriptLine, MetricRow), String> {
    let entry = ctx.corpus.get(&cell.record_id).ok_or_else(|| format!("unknown record {}", cell.record_id))?;
    let backend = *ctx.backends.get(&cell.backend).ok_or_else(|| format!("unknown backend {}", cell.backend))?;
    let (strategy, prompts) = *ctx.strategies.get(&cell.strategy).ok_or_else(|| format!("unknown strategy {}", cell.strategy))?;
    let transcript = drive(backend, cell, entry, strategy, prompts, ctx.config)?;
    if let Terminal::BackendError { message } = &transcript.terminal {
        return Err(format!("backend error: {message}"));
    }
    let (set, gap) = build_toolset(cell.condition, cell.toolset_seed(), &entry.record, cell.task).map_err(|e| e.to_string())?;
    let row = compute_metrics(&transcript, entry.qa_for(cell.task), &entry.record, &set, gap.as_ref());
    let line = TranscriptLine { cell_id: cell.id(), cell: cell.clone(), strategy_config: strategy.clone(), transcript };
    Ok((line, row))
}

fn drive(
    backend: &dyn Backend,
    cell: &Cell,
    entry: &crate::corpus::CorpusEntry,
    strategy: &StrategyConfig,
    prompts: &PromptSet,
    config: &RunConfig,
) -> Result<Transcript, String> {
    let (set, gap) = build_toolset(cell.condition, cell.toolset_seed(), &entry.record, cell.task).map_err(|e| e.to_string())?;
    let builder = SimulatedBuilder { gap, policy: strategy.builder_policy };
    let mut options = session_options(strategy, prompts, config.limits, Some(&builder));
    options.strategy = cell.strategy.clone();
    let qa = entry.qa_for(cell.task);
    if strategy.flags.multi_agent {
        run_multi_agent(RoleBackends::shared(backend), qa, &entry.record, &set, &options).map_err(|e| e.to_string())
    } else {
        Ok(run_session(backend, qa, &entry.record, &set, &options))
    }
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            // A torn final line from an interrupted run is dropped.
            Err(_) if is_last_line(path, i)? => break,
            Err(e) => {
                return Err(HarnessError::Format { path: path.display().to_string(), line: i + 1, message: e.to_string() })
            }
        }
    }
    Ok(out)
}

fn is_last_line(path: &Path, index: usize) -> Result<bool, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(BufReader::new(file).lines().count() == index + 1)
}

pub fn read_transcripts(dir: &Path) -> Result<Vec<TranscriptLine>, HarnessError> {
    read_lines(&dir.join(TRANSCRIPTS))
}

pub fn read_metrics(dir: &Path) -> Result<Vec<MetricLine>, HarnessError> {
    read_lines(&dir.join(METRICS))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for item in items {
        serde_json::to_writer(&mut w, item).expect("line serializes");
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Run every pending cell. Completed cells already on disk are kept when
/// `config.resume` is set; otherwise the output files are replaced.
pub fn run_benchmark(config: &RunConfig) -> Result<RunManifest, HarnessError> {
    let corpus = load_run_corpus(config)?;
    let strategies = strategy_prompts(config)?;
    let instances: Vec<Box<dyn Backend>> = config
        .backends
        .iter()
        .map(|b| b.instantiate().map_err(|e| ConfigError::Invalid(e.to_string())))
        .collect::<Result<_, _>>()?;
    let ctx = CellContext {
        config,
        corpus: &corpus,
        backends: config.backends.iter().zip(&instances).map(|(s, b)| (s.label().to_string(), b.as_ref())).collect(),
        strategies: strategies.iter().map(|s| (s.0.label(), s)).collect(),
    };

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cells = enumerate_cells(config, &corpus);
    let ids: Vec<String> = cells.iter().map(Cell::id).collect();

    // Keep completed cells that have both a transcript and a metric row.
    let mut done: HashSet<String> = HashSet::new();
    if config.resume {
        let transcripts = read_transcripts(dir)?;
        let metrics = read_metrics(dir)?;
        let with_rows: HashSet<&str> = metrics.iter().map(|m| m.cell_id.as_str()).collect();
        let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
        done = transcripts
            .iter()
            .map(|t| t.cell_id.as_str())
            .filter(|id| with_rows.contains(id) && wanted.contains(id))
            .map(str::to_string)
            .collect();
        let transcripts: Vec<_> = transcripts.into_iter().filter(|t| done.contains(&t.cell_id)).collect();
        let metrics: Vec<_> = metrics.into_iter().filter(|m| done.contains(&m.cell_id)).collect();
        write_jsonl(&dir.join(TRANSCRIPTS), &transcripts)?;
        write_jsonl(&dir.join(METRICS), &metrics)?;
    } else {
        write_jsonl::<TranscriptLine>(&dir.join(TRANSCRIPTS), &[])?;
        write_jsonl::<MetricLine>(&dir.join(METRICS), &[])?;
    }

    let mut manifest = RunManifest {
        cells: cells
            .iter()
            .zip(&ids)
            .map(|(c, id)| CellEntry {
                id: id.clone(),
                cell: c.clone(),
                status: if done.contains(id) { CellStatus::Done } else { CellStatus::Pending },
            })
            .collect(),
    };
    manifest.save(dir)?;

    let pending: Vec<usize> = (0..cells.len()).filter(|i| !done.contains(&ids[*i])).collect();
    let workers = config
        .backends
        .iter()
        .map(|b| b.max_parallelism())
        .fold(config.workers, usize::min)
        .clamp(1, pending.len().max(1));

    let append = |name: &str| -> Result<BufWriter<File>, HarnessError> {
        let path = dir.join(name);
        let f = OpenOptions::new().append(true).create(true).open(&path).map_err(io_err(&path))?;
        Ok(BufWriter::new(f))
    };
    let mut transcripts_out = append(TRANSCRIPTS)?;
    let mut metrics_out = append(METRICS)?;

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<(TranscriptLine, MetricRow), String>)>();
    let write_result: Result<(), HarnessError> = thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, pending, cells, ctx) = (&next, &pending, &cells, &ctx);
            s.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = pending.get(k) else { break };
                let result = catch_unwind(AssertUnwindSafe(|| run_cell(&cells[i], ctx)))
                    .unwrap_or_else(|p| Err(panic_message(p.as_ref())));
                if tx.send((k, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Single writer, in cell order.
        let mut buffered = BTreeMap::new();
        let mut expected = 0;
        for (k, result) in rx {
            buffered.insert(k, result);
            while let Some(result) = buffered.remove(&expected) {
                let i = pending[expected];
                manifest.cells[i].status = match result {
                    Ok((line, row)) => {
                        let tpath = dir.join(TRANSCRIPTS);
                        let mpath = dir.join(METRICS);
                        serde_json::to_writer(&mut transcripts_out, &line).expect("line serializes");
                        transcripts_out.write_all(b"\n").and_then(|_| transcripts_out.flush()).map_err(io_err(&tpath))?;
                        let mline = MetricLine { cell_id: line.cell_id, row };
                        serde_json::to_writer(&mut metrics_out, &mline).expect("row serializes");
                        metrics_out.write_all(b"\n").and_then(|_| metrics_out.flush()).map_err(io_err(&mpath))?;
                        CellStatus::Done
                    }
                    Err(error) => CellStatus::Failed { error },
                };
                expected += 1;
            }
        }
        Ok(())
    });
    write_result?;
    manifest.save(dir)?;
    Ok(manifest)
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    let msg = p
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into());
    format!("panic: {msg}")
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReplayReport {
    pub sessions: usize,
    /// Cells whose re-driven transcript differs from the stored one.
    pub transcript_mismatches: Vec<String>,
    /// Cells whose recomputed metric row differs from the stored one.
    pub metric_mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn is_exact(&self) -> bool {
        self.transcript_mismatches.is_empty() && self.metric_mismatches.is_empty()
    }
}

/// Re-drive every stored session with its recorded responses and
/// recompute its metric row.
pub fn replay(config: &RunConfig) -> Result<ReplayReport, HarnessError> {
    replay_dir(config, &config.output_dir)
}

pub fn replay_dir(config: &RunConfig, dir: &Path) -> Result<ReplayReport, HarnessError> {
    let corpus = load_run_corpus(config)?;
    let strategies = strategy_prompts(config)?;
    let rows: HashMap<String, MetricRow> = read_metrics(dir)?.into_iter().map(|m| (m.cell_id, m.row)).collect();
    let mut report = ReplayReport::default();
    for line in read_transcripts(dir)? {
        report.sessions += 1;
        let entry = corpus.get(&line.cell.record_id).ok_or_else(|| ConfigError::BadEnum {
            key: "records".into(),
            value: line.cell.record_id.clone(),
        })?;
        let prompts = match strategies.iter().find(|s| s.0 == line.strategy_config) {
            Some((_, p)) => p.clone(),
            None => {
                let registry = match &config.prompt_registry {
                    Some(d) => PromptRegistry::open(d).map_err(|e| ConfigError::Invalid(e.to_string()))?,
                    None => PromptRegistry::in_memory(),
                };
                let set = registry.get(line.strategy_config.prompt_version()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                augment_prompt_set(set, line.strategy_config.flags)
            }
        };
        let canned = CannedBackend::new(line.transcript.backend.clone(), line.transcript.responses());
        let replayed = drive(&canned, &line.cell, entry, &line.strategy_config, &prompts, config);
        let transcript = match replayed {
            Ok(t) if t == line.transcript => t,
            _ => {
                report.transcript_mismatches.push(line.cell_id.clone());
                line.transcript.clone()
            }
        };
        let (set, gap) = build_toolset(line.cell.condition, line.cell.toolset_seed(), &entry.record, line.cell.task)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let row = compute_metrics(&transcript, entry.qa_for(line.cell.task), &entry.record, &set, gap.as_ref());
        if rows.get(&line.cell_id) != Some(&row) {
            report.metric_mismatches.push(line.cell_id.clone());
        }
    }
    Ok(report)
}

