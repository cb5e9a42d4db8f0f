use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::TaskType;
use crate::engine::live::{LiveBackend, LiveConfig};
use crate::engine::{Backend, BackendError, Behavior, Limits, ScriptedBackend};
use crate::strategies::{BuilderPolicy, StrategyConfig, StrategyFlags};
use crate::toolset_sim::Condition;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("config syntax: {0}")]
    Parse(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadEnum { key: String, value: String },
    #[error("environment variable `{0}` holding the API key is not set")]
    SecretUnset(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Scripted { label: String, behavior: Behavior },
    Live { label: String, config: LiveConfig },
}

impl BackendSpec {
    pub fn label(&self) -> &str {
        match self {
            BackendSpec::Scripted { label, .. } | BackendSpec::Live { label, .. } => label,
        }
    }

    pub fn max_parallelism(&self) -> usize {
        match self {
            BackendSpec::Scripted { .. } => usize::MAX,
            BackendSpec::Live { config, .. } => config.max_parallelism.max(1),
        }
    }

    /// Live backends read their key from the environment here.
    pub fn instantiate(&self) -> Result<Box<dyn Backend>, BackendError> {
        Ok(match self {
            BackendSpec::Scripted { label, behavior } => Box::new(ScriptedBackend::with_label(behavior.clone(), label)),
            BackendSpec::Live { label, config } => Box::new(LiveBackend::new(label, config.clone())?),
        })
    }
}

/// A validated run description. Holds the names of secret-bearing
/// environment variables, never their values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// `None` uses the bundled corpus.
    pub corpus_dir: Option<PathBuf>,
    /// Empty keeps every record.
    pub records: Vec<String>,
    pub conditions: Vec<Condition>,
    pub tasks: Vec<TaskType>,
    pub seeds: Vec<u64>,
    pub backends: Vec<BackendSpec>,
    pub strategies: Vec<StrategyConfig>,
    pub limits: Limits,
    pub output_dir: PathBuf,
    pub resume: bool,
    pub workers: usize,
    pub max_cells: Option<usize>,
    /// Directory of added prompt versions.
    pub prompt_registry: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    corpus_dir: Option<PathBuf>,
    #[serde(default)]
    records: Vec<String>,
    conditions: Option<Vec<String>>,
    tasks: Option<Vec<u8>>,
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    backends: Vec<RawBackend>,
    #[serde(default)]
    strategies: Vec<RawStrategy>,
    limits: Option<RawLimits>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    resume: bool,
    workers: Option<usize>,
    max_cells: Option<usize>,
    prompt_registry: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBackend {
    label: Option<String>,
    kind: Option<String>,
    behavior: Option<String>,
    endpoint: Option<String>,
    model: Option<String>,
    api_key_env: Option<String>,
    temperature: Option<f64>,
    retries: Option<u32>,
    timeout_secs: Option<u64>,
    max_parallelism: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStrategy {
    #[serde(default)]
    self_reflection: bool,
    #[serde(default)]
    few_shot: bool,
    #[serde(default)]
    multi_agent: bool,
    #[serde(default)]
    auto_build: bool,
    #[serde(default)]
    prompt_set: String,
    builder_policy: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    max_steps: Option<usize>,
    #[serde(default)]
    abort_on_io_error: bool,
}

fn required<T>(value: Option<T>, key: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::MissingKey(key.to_string()))
}

fn bad(key: &str, value: impl ToString) -> ConfigError {
    ConfigError::BadEnum { key: key.to_string(), value: value.to_string() }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut config = parse_config(&text)?;
    // Relative paths are taken from the config file's directory.
    let base = path.parent().unwrap_or(Path::new(""));
    let anchor = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    anchor(&mut config.output_dir);
    if let Some(p) = config.corpus_dir.as_mut() {
        anchor(p);
    }
    if let Some(p) = config.prompt_registry.as_mut() {
        anchor(p);
    }
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;

    let conditions = required(raw.conditions, "conditions")?
        .iter()
        .map(|c| c.parse::<Condition>().map_err(|_| bad("conditions", c)))
        .collect::<Result<Vec<_>, _>>()?;
    if conditions.is_empty() {
        return Err(ConfigError::Invalid("`conditions` is empty".into()));
    }
    let tasks = match raw.tasks {
        None => TaskType::all().collect(),
        Some(list) => list.iter().map(|n| TaskType::new(*n).map_err(|_| bad("tasks", n))).collect::<Result<_, _>>()?,
    };
    let seeds = required(raw.seeds, "seeds")?;
    if seeds.is_empty() {
        return Err(ConfigError::Invalid("`seeds` is empty".into()));
    }

    if raw.backends.is_empty() {
        return Err(ConfigError::MissingKey("backends".into()));
    }
    let mut backends = Vec::new();
    for (i, b) in raw.backends.into_iter().enumerate() {
        let key = |k: &str| format!("backends[{i}].{k}");
        let label = required(b.label, &key("label"))?;
        let kind = required(b.kind, &key("kind"))?;
        let spec = match kind.to_ascii_lowercase().as_str() {
            "scripted" => {
                let behavior = required(b.behavior, &key("behavior"))?;
                let behavior = behavior.parse::<Behavior>().map_err(|_| bad(&key("behavior"), &behavior))?;
                BackendSpec::Scripted { label, behavior }
            }
            "live" | "openai" => {
                let api_key_env = required(b.api_key_env, &key("api_key_env"))?;
                if std::env::var(&api_key_env).map_or(true, |v| v.is_empty()) {
                    return Err(ConfigError::SecretUnset(api_key_env));
                }
                let config = LiveConfig {
                    endpoint: required(b.endpoint, &key("endpoint"))?,
                    model: required(b.model, &key("model"))?,
                    api_key_env,
                    temperature: b.temperature.unwrap_or(0.0),
                    retries: b.retries.unwrap_or(2),
                    timeout_secs: b.timeout_secs.unwrap_or(120),
                    max_parallelism: b.max_parallelism.unwrap_or(4).max(1),
                };
                BackendSpec::Live { label, config }
            }
            _ => return Err(bad(&key("kind"), kind)),
        };
        if backends.iter().any(|x: &BackendSpec| x.label() == spec.label()) {
            return Err(ConfigError::Invalid(format!("duplicate backend label `{}`", spec.label())));
        }
        backends.push(spec);
    }

    let raw_strategies = if raw.strategies.is_empty() { vec![RawStrategy::default()] } else { raw.strategies };
    let mut strategies: Vec<StrategyConfig> = Vec::new();
    for (i, s) in raw_strategies.into_iter().enumerate() {
        let builder_policy = match s.builder_policy {
            None => BuilderPolicy::ExactMatch,
            Some(p) => p.parse().map_err(|_| bad(&format!("strategies[{i}].builder_policy"), &p))?,
        };
        let config = StrategyConfig {
            flags: StrategyFlags {
                self_reflection: s.self_reflection,
                few_shot: s.few_shot,
                multi_agent: s.multi_agent,
                auto_build: s.auto_build,
            },
            prompt_set: s.prompt_set,
            builder_policy,
        };
        if strategies.iter().any(|x| x.label() == config.label()) {
            return Err(ConfigError::Invalid(format!("duplicate strategy `{}`", config.label())));
        }
        strategies.push(config);
    }

    let limits = raw
        .limits
        .map(|l| Limits { max_steps: l.max_steps, abort_on_io_error: l.abort_on_io_error })
        .unwrap_or_default();
    let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    Ok(RunConfig {
        corpus_dir: raw.corpus_dir,
        records: raw.records,
        conditions,
        tasks,
        seeds,
        backends,
        strategies,
        limits,
        output_dir: required(raw.output_dir, "output_dir")?,
        resume: raw.resume,
        workers: raw.workers.unwrap_or(default_workers).max(1),
        max_cells: raw.max_cells,
        prompt_registry: raw.prompt_registry,
    })
}
