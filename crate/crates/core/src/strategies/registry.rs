use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::engine::{AgentRole, Backend, BackendError, ChatMessage, ChatRequest, Phase, PromptSet, Transcript};

const MANIFEST: &str = "manifest.json";
const TEMPLATE_NAMES: [&str; 6] = ["decompose", "step", "conclude", "planner", "executor", "concluder"];

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown prompt version `{0}`")]
    UnknownVersion(String),
    #[error("prompt version `{0}` already exists")]
    Duplicate(String),
    #[error("prompt version `{0}` lacks stage templates")]
    Incomplete(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {message}")]
    Manifest { path: String, message: String },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    active: Option<String>,
    versions: Vec<VersionEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionEntry {
    pub name: String,
    pub parent: Option<String>,
}

/// Named prompt versions. The two built-in versions are always present;
/// added versions live as plain-text files under the registry directory.
#[derive(Debug, Clone)]
pub struct PromptRegistry {
    dir: Option<PathBuf>,
    versions: IndexMap<String, PromptSet>,
    entries: Vec<VersionEntry>,
    active: String,
}

impl Default for PromptRegistry {
    fn default() -> Self {
        PromptRegistry::in_memory()
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RegistryError + '_ {
    move |source| RegistryError::Io { path: path.display().to_string(), source }
}

impl PromptRegistry {
    pub fn in_memory() -> PromptRegistry {
        let mut versions = IndexMap::new();
        for set in [PromptSet::base(), PromptSet::refined()] {
            versions.insert(set.version.clone(), set);
        }
        PromptRegistry { dir: None, versions, entries: Vec::new(), active: "v0-base".into() }
    }

    /// Open (or create) a registry directory.
    pub fn open(dir: &Path) -> Result<PromptRegistry, RegistryError> {
        let mut reg = PromptRegistry::in_memory();
        reg.dir = Some(dir.to_path_buf());
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(reg);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| RegistryError::Manifest { path: path.display().to_string(), message: e.to_string() })?;
        for entry in manifest.versions {
            let vdir = dir.join(&entry.name);
            let read = |name: &str| -> Result<Option<String>, RegistryError> {
                let p = vdir.join(format!("{name}.txt"));
                if p.exists() {
                    fs::read_to_string(&p).map(Some).map_err(io_err(&p))
                } else {
                    Ok(None)
                }
            };
            let [decompose, step, conclude, planner, executor, concluder] = TEMPLATE_NAMES.map(read);
            let (Some(decompose), Some(step), Some(conclude)) = (decompose?, step?, conclude?) else {
                return Err(RegistryError::Incomplete(entry.name));
            };
            let set = PromptSet {
                version: entry.name.clone(),
                decompose,
                step,
                conclude,
                planner: planner?,
                executor: executor?,
                concluder: concluder?,
            };
            reg.versions.insert(entry.name.clone(), set);
            reg.entries.push(entry);
        }
        if let Some(active) = manifest.active {
            if !reg.versions.contains_key(&active) {
                return Err(RegistryError::UnknownVersion(active));
            }
            reg.active = active;
        }
        Ok(reg)
    }

    pub fn get(&self, version: &str) -> Result<&PromptSet, RegistryError> {
        self.versions.get(version).ok_or_else(|| RegistryError::UnknownVersion(version.to_string()))
    }

    pub fn versions(&self) -> impl Iterator<Item = &str> {
        self.versions.keys().map(String::as_str)
    }

    pub fn added(&self) -> &[VersionEntry] {
        &self.entries
    }

    pub fn active(&self) -> &str {
        &self.active
    }

    pub fn activate(&mut self, version: &str) -> Result<(), RegistryError> {
        self.get(version)?;
        self.active = version.to_string();
        self.save_manifest()
    }

    /// Store a new version. Role templates are all-or-nothing.
    pub fn add(&mut self, set: PromptSet, parent: Option<&str>) -> Result<(), RegistryError> {
        if self.versions.contains_key(&set.version) {
            return Err(RegistryError::Duplicate(set.version));
        }
        let roles = [&set.planner, &set.executor, &set.concluder];
        if roles.iter().any(|r| r.is_some()) && !set.has_roles() {
            return Err(RegistryError::Incomplete(set.version));
        }
        if let Some(dir) = &self.dir {
            let vdir = dir.join(&set.version);
            fs::create_dir_all(&vdir).map_err(io_err(&vdir))?;
            let texts = [
                Some(&set.decompose),
                Some(&set.step),
                Some(&set.conclude),
                set.planner.as_ref(),
                set.executor.as_ref(),
                set.concluder.as_ref(),
            ];
            for (name, text) in TEMPLATE_NAMES.iter().zip(texts) {
                if let Some(text) = text {
                    let p = vdir.join(format!("{name}.txt"));
                    fs::write(&p, text).map_err(io_err(&p))?;
                }
            }
        }
        self.entries.push(VersionEntry { name: set.version.clone(), parent: parent.map(str::to_string) });
        self.versions.insert(set.version.clone(), set);
        self.save_manifest()
    }

    fn save_manifest(&self) -> Result<(), RegistryError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest = Manifest { active: Some(self.active.clone()), versions: self.entries.clone() };
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }

    /// Next free `<stem>-r<n>` name, where the stem is the part of
    /// `version` before its first `-`.
    pub fn next_round_name(&self, version: &str) -> String {
        let stem = version.split('-').next().unwrap_or(version);
        let prefix = format!("{stem}-r");
        let n = self
            .versions
            .keys()
            .filter_map(|k| k.strip_prefix(&prefix)?.parse::<u32>().ok())
            .max()
            .unwrap_or(0);
        format!("{prefix}{}", n + 1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CritiqueError {
    #[error("critique needs at least one sample transcript")]
    EmptySample,
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub const CRITIQUE_INSTRUCTIONS: &str = "You are reviewing the prompt templates of a radiology agent. Below are the \
current templates and excerpts from sessions that failed. Propose revised templates that prevent these failures. \
Keep every {placeholder} intact. Reply with each revised template under a header line of the form \
`=== <template name> ===`; omit templates you would not change.";

const EXCERPT_CHARS: usize = 600;

fn excerpt(t: &Transcript) -> String {
    let mut out = format!(
        "- {} ({}, task {}): ended {}\n",
        t.qa_id,
        t.condition.name(),
        t.task.number(),
        t.terminal.name()
    );
    if let Some(step) = t.steps.last() {
        let text: String = step.response.chars().take(EXCERPT_CHARS).collect();
        out.push_str("  last response:\n");
        for line in text.lines() {
            out.push_str("    ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn parse_sections(text: &str) -> IndexMap<String, String> {
    let mut out: IndexMap<String, String> = IndexMap::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        let header = line.trim().strip_prefix("===").and_then(|l| l.strip_suffix("===")).map(str::trim);
        if let Some(name) = header.filter(|n| TEMPLATE_NAMES.contains(n)) {
            if let Some((n, body)) = current.take() {
                out.insert(n, body.join("\n").trim().to_string());
            }
            current = Some((name.to_string(), Vec::new()));
        } else if let Some((_, body)) = current.as_mut() {
            body.push(line);
        }
    }
    if let Some((n, body)) = current {
        out.insert(n, body.join("\n").trim().to_string());
    }
    out.retain(|_, v| !v.is_empty());
    out
}

/// Ask `backend` for revised templates and store them as a new version.
/// Templates the reply leaves out are inherited. The new version is not
/// activated.
pub fn critique_prompt_round(
    backend: &dyn Backend,
    registry: &mut PromptRegistry,
    version: &str,
    samples: &[Transcript],
) -> Result<String, CritiqueError> {
    if samples.is_empty() {
        return Err(CritiqueError::EmptySample);
    }
    let base = registry.get(version)?.clone();
    let mut request = format!("{CRITIQUE_INSTRUCTIONS}\n\n# Current templates\n");
    let current = [
        Some(&base.decompose),
        Some(&base.step),
        Some(&base.conclude),
        base.planner.as_ref(),
        base.executor.as_ref(),
        base.concluder.as_ref(),
    ];
    for (name, text) in TEMPLATE_NAMES.iter().zip(current) {
        if let Some(text) = text {
            request.push_str(&format!("=== {name} ===\n{text}\n"));
        }
    }
    request.push_str(&format!("\n# Failed sessions ({})\n", samples.len()));
    for t in samples {
        request.push_str(&excerpt(t));
    }
    let messages = [ChatMessage::user(request)];
    let reply = backend.send(&ChatRequest {
        messages: &messages,
        phase: Phase::Critique,
        role: AgentRole::Critic,
        reflection: false,
        situation: None,
    })?;
    let revised = parse_sections(&reply);
    let pick = |name: &str, old: &String| revised.get(name).cloned().unwrap_or_else(|| old.clone());
    let name = registry.next_round_name(version);
    let set = PromptSet {
        version: name.clone(),
        decompose: pick("decompose", &base.decompose),
        step: pick("step", &base.step),
        conclude: pick("conclude", &base.conclude),
        planner: base.planner.as_ref().map(|t| pick("planner", t)),
        executor: base.executor.as_ref().map(|t| pick("executor", t)),
        concluder: base.concluder.as_ref().map(|t| pick("concluder", t)),
    };
    registry.add(set, Some(version))?;
    Ok(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections() {
        let s = parse_sections("intro\n=== step ===\nnew step\nline\n=== bogus ===\nx\n=== conclude ===\n\n");
        assert_eq!(s.get("step").map(String::as_str), Some("new step\nline\n=== bogus ===\nx"));
        assert!(!s.contains_key("conclude"));
    }

    #[test]
    fn round_names() {
        let mut reg = PromptRegistry::in_memory();
        assert_eq!(reg.next_round_name("v0-base"), "v0-r1");
        let mut set = PromptSet::base();
        set.version = "v0-r1".into();
        reg.add(set, Some("v0-base")).unwrap();
        assert_eq!(reg.next_round_name("v0-r1"), "v0-r2");
        assert_eq!(reg.next_round_name("v1-refined"), "v1-r1");
    }

    #[test]
    fn persisted_versions_reload() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = PromptRegistry::open(dir.path()).unwrap();
        let mut set = PromptSet::refined();
        set.version = "v1-r1".into();
        set.step = "changed {value_dict}".into();
        reg.add(set.clone(), Some("v1-refined")).unwrap();
        let again = PromptRegistry::open(dir.path()).unwrap();
        assert_eq!(again.get("v1-r1").unwrap(), &set);
        assert_eq!(again.active(), "v0-base");
        assert!(matches!(again.get("v9"), Err(RegistryError::UnknownVersion(_))));
    }
}
