use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radbench::corpus::{bundled_corpus, load_corpus_dir, Corpus, TaskType};
use radbench::harness::{
    emit_report, gen_toolsets, load_config, read_metrics, read_transcripts, replay_dir, run_benchmark, validate_data,
    ConfigError, HarnessError, ReportError,
};
use radbench::strategies::{critique_prompt_round, PromptRegistry};
use radbench::toolset_sim::Condition;

const CONFIG_ERROR: u8 = 2;
const PARTIAL_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "radbench", version, about = "Simulated radiology tool-use benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus directory (or the bundled corpus) for QA leakage.
    ValidateData {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Write generated tool sets as JSON files.
    GenToolsets {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Comma-separated condition names; all when omitted.
        #[arg(long, value_delimiter = ',')]
        conditions: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<u8>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
    },
    /// Execute every pending cell of a run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Keep completed cells from a previous run.
        #[arg(long)]
        resume: bool,
        /// Also write the report files.
        #[arg(long)]
        report: bool,
    },
    /// Aggregate a run directory into summary tables.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Re-drive stored sessions and check their metric rows.
    Replay {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; the config's output directory when omitted.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Propose a revised prompt version from the failed sessions of a run.
    Critique {
        #[arg(long)]
        config: PathBuf,
        /// Backend label from the config that writes the revision.
        #[arg(long)]
        backend: String,
        #[arg(long, default_value = "v0-base")]
        version: String,
        /// Run directory holding the sample; the config's output directory when omitted.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Registry directory; the config's `prompt_registry` when omitted.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn harness_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(_) => CONFIG_ERROR,
        _ => 1,
    }
}

fn corpus(dir: Option<&Path>) -> Result<Corpus, String> {
    match dir {
        None => Ok(bundled_corpus()),
        Some(d) => load_corpus_dir(d).map_err(|e| format!("{}: {e}", d.display())),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ValidateData { corpus: dir } => {
            let corpus = match corpus(dir.as_deref()) {
                Ok(c) => c,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            let issues = validate_data(&corpus);
            for issue in &issues {
                println!("{issue}");
            }
            println!("{} records, {} issues", corpus.entries.len(), issues.len());
            if issues.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(PARTIAL_FAILURE)
            }
        }
        Command::GenToolsets { out, corpus: dir, conditions, tasks, seeds } => {
            let corpus = match corpus(dir.as_deref()) {
                Ok(c) => c,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            let conditions: Vec<Condition> = if conditions.is_empty() {
                Condition::ALL.to_vec()
            } else {
                match conditions.iter().map(|c| c.parse()).collect::<Result<_, _>>() {
                    Ok(c) => c,
                    Err(e) => return fail(CONFIG_ERROR, e),
                }
            };
            let tasks: Vec<TaskType> = if tasks.is_empty() {
                TaskType::all().collect()
            } else {
                match tasks.iter().map(|t| TaskType::new(*t)).collect::<Result<_, _>>() {
                    Ok(t) => t,
                    Err(e) => return fail(CONFIG_ERROR, e),
                }
            };
            match gen_toolsets(&corpus, &conditions, &tasks, &seeds, &out) {
                Ok(n) => {
                    println!("wrote {n} tool sets to {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(harness_code(&e), e),
            }
        }
        Command::Run { config, resume, report } => {
            let mut config = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            config.resume |= resume;
            let manifest = match run_benchmark(&config) {
                Ok(m) => m,
                Err(e) => return fail(harness_code(&e), e),
            };
            println!(
                "{} cells: {} done, {} failed -> {}",
                manifest.cells.len(),
                manifest.done(),
                manifest.failed(),
                config.output_dir.display()
            );
            if report {
                if let Err(e) = emit_report(&config.output_dir) {
                    return fail(1, e);
                }
            }
            if manifest.failed() > 0 {
                ExitCode::from(PARTIAL_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Report { dir } => match emit_report(&dir) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                ExitCode::SUCCESS
            }
            Err(e @ ReportError::EmptyManifest) => fail(PARTIAL_FAILURE, e),
            Err(e) => fail(1, e),
        },
        Command::Replay { config, dir } => {
            let config = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            let dir = dir.unwrap_or_else(|| config.output_dir.clone());
            match replay_dir(&config, &dir) {
                Ok(r) => {
                    println!(
                        "{} sessions, {} transcript mismatches, {} metric mismatches",
                        r.sessions,
                        r.transcript_mismatches.len(),
                        r.metric_mismatches.len()
                    );
                    for id in r.transcript_mismatches.iter().chain(&r.metric_mismatches) {
                        println!("  {id}");
                    }
                    if r.is_exact() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(PARTIAL_FAILURE)
                    }
                }
                Err(e) => fail(harness_code(&e), e),
            }
        }
        Command::Critique { config, backend, version, from, registry } => {
            let config = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            let Some(spec) = config.backends.iter().find(|b| b.label() == backend) else {
                return fail(CONFIG_ERROR, ConfigError::BadEnum { key: "backend".into(), value: backend });
            };
            let Some(registry_dir) = registry.or_else(|| config.prompt_registry.clone()) else {
                return fail(CONFIG_ERROR, ConfigError::MissingKey("prompt_registry".into()));
            };
            let dir = from.unwrap_or_else(|| config.output_dir.clone());
            let sample = match failed_sessions(&dir) {
                Ok(s) => s,
                Err(e) => return fail(harness_code(&e), e),
            };
            let mut registry = match PromptRegistry::open(&registry_dir) {
                Ok(r) => r,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            let backend = match spec.instantiate() {
                Ok(b) => b,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            match critique_prompt_round(backend.as_ref(), &mut registry, &version, &sample) {
                Ok(name) => {
                    println!("stored prompt version {name} ({} failed sessions); not activated", sample.len());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(1, e),
            }
        }
    }
}

/// Transcripts of the sessions whose metric row is not a completion.
fn failed_sessions(dir: &Path) -> Result<Vec<radbench::engine::Transcript>, HarnessError> {
    let failed: HashSet<String> =
        read_metrics(dir)?.into_iter().filter(|m| !m.row.values.completion).map(|m| m.cell_id).collect();
    Ok(read_transcripts(dir)?.into_iter().filter(|t| failed.contains(&t.cell_id)).map(|t| t.transcript).collect())
}
