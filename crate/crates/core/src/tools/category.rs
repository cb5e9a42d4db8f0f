use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ToolCategory {
    AnatomyClassifier,
    ModalityClassifier,
    OrganSegmentor,
    AnomalyDetector,
    ImagingDiagnoser,
    GroundedDiagnoser,
    BiomarkerQuantifier,
    IndicatorEvaluator,
    ReportGenerator,
    TreatmentPlanner,
}

/// Organ- or anomaly-focused flavour of the biomarker and indicator tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Organ,
    Anomaly,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Organ, Variant::Anomaly];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Organ => "organ",
            Variant::Anomaly => "anomaly",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Variant::Organ => "Organ",
            Variant::Anomaly => "Anomaly",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown tool category `{0}`")]
pub struct UnknownCategory(pub String);

impl ToolCategory {
    pub const ALL: [ToolCategory; 10] = [
        ToolCategory::AnatomyClassifier,
        ToolCategory::ModalityClassifier,
        ToolCategory::OrganSegmentor,
        ToolCategory::AnomalyDetector,
        ToolCategory::ImagingDiagnoser,
        ToolCategory::GroundedDiagnoser,
        ToolCategory::BiomarkerQuantifier,
        ToolCategory::IndicatorEvaluator,
        ToolCategory::ReportGenerator,
        ToolCategory::TreatmentPlanner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToolCategory::AnatomyClassifier => "Anatomy Classifier",
            ToolCategory::ModalityClassifier => "Modality Classifier",
            ToolCategory::OrganSegmentor => "Organ Segmentor",
            ToolCategory::AnomalyDetector => "Anomaly Detector",
            ToolCategory::ImagingDiagnoser => "Imaging Diagnoser",
            ToolCategory::GroundedDiagnoser => "Grounded Diagnoser",
            ToolCategory::BiomarkerQuantifier => "Biomarker Quantifier",
            ToolCategory::IndicatorEvaluator => "Indicator Evaluator",
            ToolCategory::ReportGenerator => "Report Generator",
            ToolCategory::TreatmentPlanner => "Treatment Planner",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            ToolCategory::AnatomyClassifier => "AC",
            ToolCategory::ModalityClassifier => "MC",
            ToolCategory::OrganSegmentor => "OS",
            ToolCategory::AnomalyDetector => "AD",
            ToolCategory::ImagingDiagnoser => "ID",
            ToolCategory::GroundedDiagnoser => "GD",
            ToolCategory::BiomarkerQuantifier => "BQ",
            ToolCategory::IndicatorEvaluator => "IE",
            ToolCategory::ReportGenerator => "RG",
            ToolCategory::TreatmentPlanner => "TP",
        }
    }

    /// Name used in the NoCall category list of the execution prompt.
    pub fn nocall_name(self) -> &'static str {
        match self {
            ToolCategory::ImagingDiagnoser => "Disease Diagnoser",
            ToolCategory::GroundedDiagnoser => "Disease Inferencer",
            ToolCategory::TreatmentPlanner => "Treatment Recommender",
            other => other.name(),
        }
    }

    /// Starred vocabulary of the decomposition prompt. Variant-bearing
    /// categories have an organ and an anomaly form.
    pub fn plan_name(self, variant: Option<Variant>) -> &'static str {
        match (self, variant) {
            (ToolCategory::AnatomyClassifier, _) => "Anatomy Classification Tool",
            (ToolCategory::ModalityClassifier, _) => "Modality Classification Tool",
            (ToolCategory::OrganSegmentor, _) => "Organ Segmentation Tool",
            (ToolCategory::AnomalyDetector, _) => "Anomaly Detection Tool",
            (ToolCategory::ImagingDiagnoser, _) => "Disease Diagnosis Tool",
            (ToolCategory::GroundedDiagnoser, _) => "Disease Inference Tool",
            (ToolCategory::BiomarkerQuantifier, Some(Variant::Anomaly)) => {
                "Anomaly Biomarker Quantification Tool"
            }
            (ToolCategory::BiomarkerQuantifier, _) => "Organ Biomarker Quantification Tool",
            (ToolCategory::IndicatorEvaluator, _) => "Indicator Evaluation Tool",
            (ToolCategory::ReportGenerator, _) => "Report Generation Tool",
            (ToolCategory::TreatmentPlanner, _) => "Treatment Recommendation Tool",
        }
    }

    /// Verb used in tool-building requests ("segment", "calculate").
    pub fn action_verb(self) -> &'static str {
        match self {
            ToolCategory::AnatomyClassifier | ToolCategory::ModalityClassifier => "classify",
            ToolCategory::OrganSegmentor => "segment",
            ToolCategory::AnomalyDetector => "detect",
            ToolCategory::ImagingDiagnoser => "diagnose",
            ToolCategory::GroundedDiagnoser => "infer",
            ToolCategory::BiomarkerQuantifier => "calculate",
            ToolCategory::IndicatorEvaluator => "evaluate",
            ToolCategory::ReportGenerator => "generate",
            ToolCategory::TreatmentPlanner => "recommend",
        }
    }

    /// What a tool of this category produces, as a noun phrase.
    pub fn capability_noun(self, variant: Option<Variant>) -> &'static str {
        match (self, variant) {
            (ToolCategory::AnatomyClassifier, _) => "anatomy",
            (ToolCategory::ModalityClassifier, _) => "modality",
            (ToolCategory::OrganSegmentor, _) => "organs",
            (ToolCategory::AnomalyDetector, _) => "anomalies",
            (ToolCategory::ImagingDiagnoser | ToolCategory::GroundedDiagnoser, _) => "disease",
            (ToolCategory::BiomarkerQuantifier, Some(Variant::Organ)) => "organ biomarker",
            (ToolCategory::BiomarkerQuantifier, Some(Variant::Anomaly)) => "anomaly biomarker",
            (ToolCategory::BiomarkerQuantifier, None) => "biomarker",
            (ToolCategory::IndicatorEvaluator, _) => "clinical indicator",
            (ToolCategory::ReportGenerator, _) => "report",
            (ToolCategory::TreatmentPlanner, _) => "treatment plan",
        }
    }

    pub fn has_variants(self) -> bool {
        matches!(self, ToolCategory::BiomarkerQuantifier | ToolCategory::IndicatorEvaluator)
    }

    /// Resolve a category name or alias, also reporting a variant when the
    /// alias implies one ("Organ Biomarker Quantification Tool").
    pub fn resolve(text: &str) -> Result<(ToolCategory, Option<Variant>), UnknownCategory> {
        use ToolCategory::*;
        let key = normalize(text);
        let hit = match key.as_str() {
            "anatomy classifier" | "anatomy classification tool" | "anatomy classification"
            | "anatomy classification model" | "ac" => (AnatomyClassifier, None),
            "modality classifier" | "modality classification tool" | "modality classification"
            | "modality classification model" | "mc" => (ModalityClassifier, None),
            "organ segmentor" | "organ segmenter" | "organ segmentation tool"
            | "organ segmentation" | "organ segmentation model" | "os" => (OrganSegmentor, None),
            "anomaly detector" | "anomaly detection tool" | "anomaly detection"
            | "anomaly detection model" | "ad" => (AnomalyDetector, None),
            "imaging diagnoser" | "disease diagnoser" | "disease diagnosis tool"
            | "disease diagnosis" | "disease diagnosis model" | "id" => (ImagingDiagnoser, None),
            "grounded diagnoser" | "synthetic diagnoser" | "synthetic dignoser"
            | "disease inference tool" | "disease inferencer" | "disease inference"
            | "disease inference model" | "gd" | "sd" => (GroundedDiagnoser, None),
            "biomarker quantifier" | "biomarker quantification tool" | "biomarker quantification"
            | "biomarker quantification model" | "bq" => (BiomarkerQuantifier, None),
            "organ biomarker quantification tool" | "organ biomarker quantification"
            | "organ biomarker quantifier" => (BiomarkerQuantifier, Some(Variant::Organ)),
            "anomaly biomarker quantification tool" | "anomaly biomarker quantification"
            | "anomaly biomarker quantifier" => (BiomarkerQuantifier, Some(Variant::Anomaly)),
            "indicator evaluator" | "indicator evaluation tool" | "indicator evaluation"
            | "indicator evaluation model" | "indicator calculator" | "ie" | "ic" => {
                (IndicatorEvaluator, None)
            }
            "organ indicator evaluator" => (IndicatorEvaluator, Some(Variant::Organ)),
            "anomaly indicator evaluator" => (IndicatorEvaluator, Some(Variant::Anomaly)),
            "report generator" | "report generation tool" | "report generation"
            | "report generation model" | "rg" => (ReportGenerator, None),
            "treatment planner" | "treatment recommender" | "treatment recommendation tool"
            | "treatment recommendation" | "treatment recommendation model" | "tp" | "tr" => {
                (TreatmentPlanner, None)
            }
            _ => return Err(UnknownCategory(text.trim().to_string())),
        };
        Ok(hit)
    }
}

/// Lowercase, strip emphasis stars and quotes, collapse whitespace.
fn normalize(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .filter(|c| !matches!(c, '*' | '\'' | '"' | '`' | '|'))
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl fmt::Display for ToolCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ToolCategory {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ToolCategory::resolve(s).map(|(c, _)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_used_in_prompts_and_traces_resolve() {
        let cases = [
            ("*Anatomy Classification Tool*", ToolCategory::AnatomyClassifier),
            ("Disease Diagnoser", ToolCategory::ImagingDiagnoser),
            ("Disease Diagnosis Tool", ToolCategory::ImagingDiagnoser),
            ("Disease Inference Tool", ToolCategory::GroundedDiagnoser),
            ("Disease Inferencer", ToolCategory::GroundedDiagnoser),
            ("Synthetic Dignoser", ToolCategory::GroundedDiagnoser),
            ("SD", ToolCategory::GroundedDiagnoser),
            ("Treatment Recommender", ToolCategory::TreatmentPlanner),
            ("Treatment \n    Recommender", ToolCategory::TreatmentPlanner),
            ("Indicator Calculator", ToolCategory::IndicatorEvaluator),
            ("'Organ Segmentor'", ToolCategory::OrganSegmentor),
        ];
        for (text, want) in cases {
            assert_eq!(text.parse::<ToolCategory>().unwrap(), want, "{text}");
        }
        assert_eq!(
            ToolCategory::resolve("*Anomaly Biomarker Quantification Tool*").unwrap(),
            (ToolCategory::BiomarkerQuantifier, Some(Variant::Anomaly))
        );
        assert!("Brain Tool".parse::<ToolCategory>().is_err());
    }

    #[test]
    fn every_rendered_name_resolves_back() {
        for c in ToolCategory::ALL {
            for name in [c.name(), c.code(), c.nocall_name()] {
                assert_eq!(name.parse::<ToolCategory>().unwrap(), c);
            }
            for v in [None, Some(Variant::Organ), Some(Variant::Anomaly)] {
                assert_eq!(c.plan_name(v).parse::<ToolCategory>().unwrap(), c);
            }
        }
    }
}
