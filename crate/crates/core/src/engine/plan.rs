use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use crate::corpus::ChainSlot;
use crate::tools::{scan_keys, InfoKey, ToolCategory};

/// Decomposition result: what the query already states and the planned
/// category chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub known_info: Vec<InfoKey>,
    pub tool_chain: Vec<ChainSlot>,
    pub raw_text: String,
}

impl Plan {
    pub fn categories(&self) -> Vec<ToolCategory> {
        self.tool_chain.iter().map(|s| s.category).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum PlanError {
    #[error("no tool chain found")]
    NoChainFound,
    #[error("unknown tool category `{0}`")]
    UnknownCategory(String),
    #[error("malformed known info: {0}")]
    MalformedKnownInfo(String),
}

static STARRED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\*([^*]+?)\*").expect("valid regex"));
static CHAIN_LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"(?i)tool\s+chain"?\s*:"#).expect("valid regex"));
static KNOWN_LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"(?i)known\s+info"?\s*:"#).expect("valid regex"));

/// Extract the plan from a decomposition response, plain or JSON-like.
pub fn parse_decomposition(text: &str) -> Result<Plan, PlanError> {
    let chain_region = match CHAIN_LABEL.find(text) {
        Some(m) => bracketed(&text[m.end()..]).unwrap_or(&text[m.end()..]),
        None => text,
    };
    let mut tool_chain = Vec::new();
    for cap in STARRED.captures_iter(chain_region) {
        let token = cap[1].trim();
        if token.is_empty() || token == "->" {
            continue;
        }
        let (category, variant) =
            ToolCategory::resolve(token).map_err(|_| PlanError::UnknownCategory(token.to_string()))?;
        tool_chain.push(ChainSlot { category, variant });
    }
    if tool_chain.is_empty() {
        return Err(PlanError::NoChainFound);
    }

    let mut known_info = Vec::new();
    if let Some(m) = KNOWN_LABEL.find(text) {
        let rest = &text[m.end()..];
        let list = bracketed(rest).ok_or_else(|| PlanError::MalformedKnownInfo("missing [ ] list".into()))?;
        for k in scan_keys(list).map_err(|e| PlanError::MalformedKnownInfo(e.to_string()))? {
            if !matches!(k, InfoKey::Report | InfoKey::Treatment) && !known_info.contains(&k) {
                known_info.push(k);
            }
        }
    }
    Ok(Plan { known_info, tool_chain, raw_text: text.to_string() })
}

/// Text inside the first `[ ... ]` that opens before any other content
/// line break, with nesting.
fn bracketed(text: &str) -> Option<&str> {
    let start = text.find('[')?;
    if text[..start].trim().contains('\n') || text[..start].trim().len() > 2 {
        return None;
    }
    let mut depth = 0usize;
    for (i, c) in text[start..].char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start + 1..start + i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// `Known Info: [...]` / `Tool Chain: [*A* -> *B*]` rendering.
pub fn render_plan(known: &[InfoKey], chain: &[ChainSlot]) -> String {
    format!("Known Info: {}\nTool Chain: {}", crate::tools::render_key_list(known), render_chain(chain))
}

pub fn render_chain(chain: &[ChainSlot]) -> String {
    let names: Vec<String> = chain.iter().map(|s| format!("*{}*", s.category.plan_name(s.variant))).collect();
    format!("[{}]", names.join(" -> "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tools::Variant;
    use ToolCategory::*;

    #[test]
    fn plain_and_json_forms() {
        let text = "Known Info: []\nTool Chain: [*Anatomy Classification Tool* -> *Modality Classification Tool* -> \n\
                    *Anomaly Detection Tool* -> *Anomaly Biomarker Quantification Tool*]";
        let plan = parse_decomposition(text).unwrap();
        assert!(plan.known_info.is_empty());
        assert_eq!(plan.categories(), [AnatomyClassifier, ModalityClassifier, AnomalyDetector, BiomarkerQuantifier]);
        assert_eq!(plan.tool_chain[3].variant, Some(Variant::Anomaly));

        let json = "```json\n{\n  \"Known Info\": ['$Information$', '$Report$'],\n  \"Self-Reflection\": \"**careful**\",\n  \
                    \"Tool Chain\": [*Report Generation Tool*]\n}";
        let plan = parse_decomposition(json).unwrap();
        assert_eq!(plan.categories(), [ReportGenerator]);
        assert_eq!(plan.known_info, [InfoKey::Information]);
    }

    #[test]
    fn trailing_prose_ignored() {
        let text = "Known Info: ['$Anatomy$']\nTool Chain: [*Organ Segmentation Tool* -> *Report Generation Tool*] \
                    (because *Anatomy Classification Tool* is optimized.)";
        let plan = parse_decomposition(text).unwrap();
        assert_eq!(plan.categories(), [OrganSegmentor, ReportGenerator]);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_decomposition("no stars here"), Err(PlanError::NoChainFound));
        assert_eq!(
            parse_decomposition("Tool Chain: [*Crystal Ball Tool*]"),
            Err(PlanError::UnknownCategory("Crystal Ball Tool".into()))
        );
        assert!(matches!(
            parse_decomposition("Known Info: ['$Brain$']\nTool Chain: [*Report Generation Tool*]"),
            Err(PlanError::MalformedKnownInfo(_))
        ));
    }

    #[test]
    fn render_round_trip() {
        let chain = vec![ChainSlot::plain(AnatomyClassifier), ChainSlot { category: BiomarkerQuantifier, variant: Some(Variant::Organ) }];
        let plan = parse_decomposition(&render_plan(&[InfoKey::Disease], &chain)).unwrap();
        assert_eq!(plan.tool_chain, chain);
        assert_eq!(plan.known_info, [InfoKey::Disease]);
    }
}
