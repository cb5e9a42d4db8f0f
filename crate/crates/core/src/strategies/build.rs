use serde::{Deserialize, Serialize};

use crate::corpus::{Anatomy, Modality, PatientRecord};
use crate::engine::{NoCallBlock, ToolBuilder};
use crate::tools::{Scope, ToolCard, ToolCategory, Variant};
use crate::toolset_sim::GroundTruthGap;

use super::BuilderPolicy;

/// A tool-building request derived from a NoCall.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildRequest {
    pub category: ToolCategory,
    pub variant: Option<Variant>,
    pub anatomy: Option<Anatomy>,
    pub modality: Option<Modality>,
    /// The capability phrase, without its leading verb.
    pub capability: String,
    pub source: NoCallBlock,
}

const LEADING_VERBS: &[&str] = &[
    "classify", "segment", "detect", "diagnose", "infer", "calculate", "evaluate", "generate", "recommend", "identify",
    "localize", "locate", "compute", "measure", "quantify", "estimate", "determine", "produce", "create", "assess",
];

fn capability_phrase(purpose: &str) -> String {
    let mut text = purpose.trim().trim_end_matches('.').trim();
    if let Some((first, rest)) = text.split_once(char::is_whitespace) {
        if LEADING_VERBS.contains(&first.to_ascii_lowercase().as_str()) {
            text = rest.trim_start();
        }
    }
    if text.len() > 4 && text[..4].eq_ignore_ascii_case("the ") {
        text = &text[4..];
    }
    text.to_string()
}

/// The request and its one-sentence rendering, e.g. "I need a model to
/// calculate the biomarker size in Chest X-ray".
pub fn emit_build_request(nocall: &NoCallBlock) -> (BuildRequest, String) {
    let request = BuildRequest {
        category: nocall.category,
        variant: nocall.variant,
        anatomy: nocall.anatomy,
        modality: nocall.modality,
        capability: capability_phrase(&nocall.purpose),
        source: nocall.clone(),
    };
    let scope = Scope { anatomy: nocall.anatomy, modality: nocall.modality }.phrase();
    let scope = if scope.is_empty() { String::new() } else { format!(" in {scope}") };
    let text = format!("I need a model to {} the {}{scope}", nocall.category.action_verb(), request.capability);
    (request, text)
}

/// Grants a tool only when the request names exactly what the tool set
/// withheld.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedBuilder {
    pub gap: Option<GroundTruthGap>,
    pub policy: BuilderPolicy,
}

impl SimulatedBuilder {
    pub fn matches(&self, request: &BuildRequest) -> bool {
        let Some(gap) = &self.gap else {
            return false;
        };
        self.policy == BuilderPolicy::ExactMatch
            && request.category == gap.category
            && request.anatomy == gap.anatomy
            && request.modality == gap.modality
            && gap
                .missing_label
                .as_ref()
                .is_none_or(|label| request.capability.to_lowercase().contains(&label.to_lowercase()))
    }

    pub fn grant(&self, request: &BuildRequest) -> Option<ToolCard> {
        let gap = self.gap.as_ref().filter(|_| self.matches(request))?;
        let scope = Scope { anatomy: gap.anatomy, modality: gap.modality };
        Some(ToolCard::build("", gap.category, request.variant, scope, false, 0.8, 0.8))
    }
}

impl ToolBuilder for SimulatedBuilder {
    fn build(&self, nocall: &NoCallBlock, _record: &PatientRecord) -> (String, Option<ToolCard>) {
        let (request, text) = emit_build_request(nocall);
        (text, self.grant(&request))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolset_sim::GapKind;

    fn nocall(purpose: &str, category: ToolCategory, anatomy: Option<Anatomy>, modality: Option<Modality>) -> NoCallBlock {
        NoCallBlock { purpose: purpose.into(), category, variant: None, anatomy, modality, ability: GapKind::CategoryMissing }
    }

    #[test]
    fn request_sentences() {
        let n = nocall(
            "Calculate the biomarker size",
            ToolCategory::BiomarkerQuantifier,
            Some(Anatomy::Chest),
            Some(Modality::XRay),
        );
        assert_eq!(emit_build_request(&n).1, "I need a model to calculate the biomarker size in Chest X-ray");
        let n = nocall("Generate structured medical report for findings.", ToolCategory::ReportGenerator, None, None);
        assert_eq!(emit_build_request(&n).1, "I need a model to generate the structured medical report for findings");
    }

    #[test]
    fn exact_match_policy() {
        let gap = GroundTruthGap {
            category: ToolCategory::OrganSegmentor,
            anatomy: Some(Anatomy::HeadAndNeck),
            modality: Some(Modality::XRay),
            kind: GapKind::InsufficientCapability,
            missing_label: Some("maxillary sinus".into()),
        };
        let mut builder = SimulatedBuilder { gap: Some(gap), policy: BuilderPolicy::ExactMatch };
        let good = nocall(
            "Segment the Maxillary Sinus",
            ToolCategory::OrganSegmentor,
            Some(Anatomy::HeadAndNeck),
            Some(Modality::XRay),
        );
        let card = builder.grant(&emit_build_request(&good).0).unwrap();
        assert_eq!(card.performance.upper, 0.8);
        assert!(card.scope.covers(Anatomy::HeadAndNeck, Modality::XRay));
        let mut wrong = good.clone();
        wrong.category = ToolCategory::AnomalyDetector;
        assert!(builder.grant(&emit_build_request(&wrong).0).is_none());
        let mut vague = good.clone();
        vague.purpose = "Segment the organs".into();
        assert!(builder.grant(&emit_build_request(&vague).0).is_none());
        builder.policy = BuilderPolicy::Off;
        assert!(builder.grant(&emit_build_request(&good).0).is_none());
    }
}
