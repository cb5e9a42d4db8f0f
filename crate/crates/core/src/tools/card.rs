//! Tool cards: the conceptual description of one simulated tool, its text
//! and JSON renderings, performance scoring and applicability.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::category::{ToolCategory, Variant};
use super::info_key::{render_key_list, scan_keys, InfoKey};
use super::signature::category_signature;
use crate::corpus::{Anatomy, Modality};

/// Anatomy/modality scope; `None` on either axis means Universal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Scope {
    pub anatomy: Option<Anatomy>,
    pub modality: Option<Modality>,
}

impl Scope {
    pub const UNIVERSAL: Scope = Scope { anatomy: None, modality: None };

    pub fn specific(anatomy: Anatomy, modality: Modality) -> Scope {
        Scope { anatomy: Some(anatomy), modality: Some(modality) }
    }

    pub fn is_universal(&self) -> bool {
        self.anatomy.is_none() && self.modality.is_none()
    }

    pub fn is_specific(&self) -> bool {
        self.anatomy.is_some() && self.modality.is_some()
    }

    pub fn covers(&self, anatomy: Anatomy, modality: Modality) -> bool {
        self.anatomy.is_none_or(|a| a == anatomy) && self.modality.is_none_or(|m| m == modality)
    }

    /// "Head and Neck X-ray", "CT", or "" for universal.
    pub fn phrase(&self) -> String {
        match (self.anatomy, self.modality) {
            (Some(a), Some(m)) => format!("{a} {m}"),
            (Some(a), None) => a.to_string(),
            (None, Some(m)) => m.to_string(),
            (None, None) => String::new(),
        }
    }

    fn parse_phrase(text: &str) -> Option<Scope> {
        let text = text.trim();
        for a in Anatomy::ALL {
            if let Some(rest) = text.strip_prefix(a.name()) {
                let rest = rest.trim();
                if rest.is_empty() {
                    return Some(Scope { anatomy: Some(a), modality: None });
                }
                return Modality::ALL
                    .into_iter()
                    .find(|m| m.name() == rest)
                    .map(|m| Scope::specific(a, m));
            }
        }
        Modality::ALL
            .into_iter()
            .find(|m| m.name() == text)
            .map(|m| Scope { anatomy: None, modality: Some(m) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl Performance {
    pub fn fixed(score: f64) -> Performance {
        Performance { lower: score, upper: score, step: 0.0 }
    }

    /// Range whose cap is reached once every optional input is supplied.
    pub fn ranged(lower: f64, upper: f64, optional_count: usize) -> Performance {
        let step = if optional_count == 0 { 0.0 } else { round_to(upper - lower, 1e9) / optional_count as f64 };
        Performance { lower, upper, step: round_to(step, 1e9) }
    }
}

fn round_to(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

/// What a capability label list enumerates for a given category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Organs,
    Anomalies,
    Diseases,
    Biomarkers,
    Indicators,
}

impl LabelKind {
    pub fn for_category(category: ToolCategory) -> Option<LabelKind> {
        match category {
            ToolCategory::OrganSegmentor => Some(LabelKind::Organs),
            ToolCategory::AnomalyDetector => Some(LabelKind::Anomalies),
            ToolCategory::ImagingDiagnoser | ToolCategory::GroundedDiagnoser => Some(LabelKind::Diseases),
            ToolCategory::BiomarkerQuantifier => Some(LabelKind::Biomarkers),
            ToolCategory::IndicatorEvaluator => Some(LabelKind::Indicators),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCard {
    pub name: String,
    pub category: ToolCategory,
    pub variant: Option<Variant>,
    pub property: String,
    /// Ability text without the capability suffix.
    pub ability: String,
    pub compulsory_input: Vec<InfoKey>,
    pub optional_input: Vec<InfoKey>,
    pub output: Vec<InfoKey>,
    pub performance: Performance,
    pub scope: Scope,
    /// Empty means unrestricted.
    pub capability_labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Applicability {
    Applicable,
    WrongScope,
    InsufficientCapability,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ToolError {
    #[error("optional input count {count} outside 0..={max}")]
    CountOutOfRange { count: usize, max: usize },
    #[error("tool card parse error: {0}")]
    Parse(String),
    #[error("invalid tool card {name}: {reason}")]
    Invalid { name: String, reason: String },
}

const LABEL_PREFIX: &str = " Only supports: ";

impl ToolCard {
    /// Card with the category's default I/O lists. `with_optional` keeps the
    /// signature's optional inputs; otherwise the optional list is empty and
    /// the score is fixed at `upper`.
    pub fn build(
        name: impl Into<String>,
        category: ToolCategory,
        variant: Option<Variant>,
        scope: Scope,
        with_optional: bool,
        lower: f64,
        upper: f64,
    ) -> ToolCard {
        let variant = if category.has_variants() { variant } else { None };
        let sig = category_signature(category, scope, variant);
        let optional = if with_optional { sig.optional } else { Vec::new() };
        let performance = if optional.is_empty() {
            Performance::fixed(upper)
        } else {
            Performance::ranged(lower, upper, optional.len())
        };
        ToolCard {
            name: name.into(),
            category,
            variant,
            property: property_text(category, variant, scope, &optional),
            ability: ability_text(category, variant, scope),
            compulsory_input: sig.compulsory,
            optional_input: optional,
            output: sig.output,
            performance,
            scope,
            capability_labels: Vec::new(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> ToolCard {
        self.capability_labels = labels;
        self
    }

    pub fn ability_line(&self) -> String {
        if self.capability_labels.is_empty() {
            self.ability.clone()
        } else {
            format!("{}{}{}.", self.ability, LABEL_PREFIX, self.capability_labels.join(", "))
        }
    }

    pub fn performance_line(&self) -> String {
        format!(
            "Score from {:?} to {:?}, increases with optional inputs",
            self.performance.lower, self.performance.upper
        )
    }

    pub fn validate(&self) -> Result<(), ToolError> {
        let bad = |reason: &str| Err(ToolError::Invalid { name: self.name.clone(), reason: reason.into() });
        let p = self.performance;
        if !(0.0..=1.0).contains(&p.lower) || !(0.0..=1.0).contains(&p.upper) || p.lower > p.upper {
            return bad("performance bounds out of order or outside [0, 1]");
        }
        if p.step < 0.0 {
            return bad("negative performance step");
        }
        if !self.optional_input.is_empty() && p.upper - p.lower > (p.step + 1e-9) * self.optional_input.len() as f64 + 1e-9 {
            return bad("performance range unreachable with the optional inputs");
        }
        let lists = [&self.compulsory_input, &self.optional_input, &self.output];
        for (i, a) in lists.iter().enumerate() {
            for b in lists.iter().skip(i + 1) {
                if a.iter().any(|k| b.contains(k)) {
                    return bad("input and output lists overlap");
                }
            }
        }
        Ok(())
    }

    /// `min(upper, lower + step * count)`, rounded to 1e-6.
    pub fn performance_score(&self, count: usize) -> Result<f64, ToolError> {
        if count > self.optional_input.len() {
            return Err(ToolError::CountOutOfRange { count, max: self.optional_input.len() });
        }
        let p = self.performance;
        Ok(round_to((p.lower + p.step * count as f64).min(p.upper), 1e6))
    }

    pub fn applicability(&self, anatomy: Anatomy, modality: Modality, need: Option<&str>) -> Applicability {
        if !self.scope.covers(anatomy, modality) {
            return Applicability::WrongScope;
        }
        if let Some(need) = need {
            if !self.capability_labels.is_empty() && !self.supports_label(need) {
                return Applicability::InsufficientCapability;
            }
        }
        Applicability::Applicable
    }

    pub fn supports_label(&self, need: &str) -> bool {
        let need = need.trim();
        self.capability_labels.iter().any(|l| l.trim().eq_ignore_ascii_case(need))
    }

    /// Whether the card can fill a chain slot of `category`/`variant`.
    pub fn serves(&self, category: ToolCategory, variant: Option<Variant>) -> bool {
        self.category == category && (variant.is_none() || self.variant.is_none() || self.variant == variant)
    }

    pub fn render(&self) -> String {
        format!(
            "=== Tool Description for {name} ===\nName: {name}\nCategory: {cat}\nAbility: {ability}\nProperty: {prop}\n\
             Compulsory Input: {comp}\nOptional Input: {opt}\nOutput: {out}\nPerformance: {perf}",
            name = self.name,
            cat = self.category.name(),
            ability = self.ability_line(),
            prop = self.property,
            comp = render_key_list(&self.compulsory_input),
            opt = render_key_list(&self.optional_input),
            out = render_key_list(&self.output),
            perf = self.performance_line(),
        )
    }

    pub fn to_json(&self) -> ToolCardJson {
        let labels = |kind: LabelKind| {
            (LabelKind::for_category(self.category) == Some(kind) && !self.capability_labels.is_empty())
                .then(|| self.capability_labels.clone())
        };
        ToolCardJson {
            name: self.name.clone(),
            category: self.category.name().to_string(),
            property: self.property.clone(),
            ability: self.ability_line(),
            compulsory_input: self.compulsory_input.clone(),
            optional_input: self.optional_input.clone(),
            output: self.output.clone(),
            lower_bound: self.performance.lower,
            upper_bound: self.performance.upper,
            step: self.performance.step,
            performance: self.performance_line(),
            anatomy: self.scope.anatomy.map(|a| a.name().to_string()),
            modality: self.scope.modality.map(|m| m.name().to_string()),
            organs: labels(LabelKind::Organs),
            anomalies: labels(LabelKind::Anomalies),
            diseases: labels(LabelKind::Diseases),
            biomarkers: labels(LabelKind::Biomarkers),
            indicators: labels(LabelKind::Indicators),
            variant: self.variant,
        }
    }

    pub fn from_json(j: &ToolCardJson) -> Result<ToolCard, ToolError> {
        let (category, alias_variant) =
            ToolCategory::resolve(&j.category).map_err(|e| ToolError::Parse(e.to_string()))?;
        let (property_scope, property_variant) = parse_property(&j.property, category)?;
        let anatomy = match &j.anatomy {
            Some(a) => Some(a.parse::<Anatomy>().map_err(|e| ToolError::Parse(e.to_string()))?),
            None => property_scope.anatomy,
        };
        let modality = match &j.modality {
            Some(m) => Some(m.parse::<Modality>().map_err(|e| ToolError::Parse(e.to_string()))?),
            None => property_scope.modality,
        };
        let (ability, mut labels) = split_ability(&j.ability);
        for list in [&j.organs, &j.anomalies, &j.diseases, &j.biomarkers, &j.indicators].into_iter().flatten() {
            if !list.is_empty() {
                labels = list.clone();
            }
        }
        let card = ToolCard {
            name: j.name.clone(),
            category,
            variant: j.variant.or(property_variant).or(alias_variant).filter(|_| category.has_variants()),
            property: j.property.clone(),
            ability,
            compulsory_input: j.compulsory_input.clone(),
            optional_input: j.optional_input.clone(),
            output: j.output.clone(),
            performance: Performance { lower: j.lower_bound, upper: j.upper_bound, step: j.step },
            scope: Scope { anatomy, modality },
            capability_labels: labels,
        };
        card.validate()?;
        Ok(card)
    }
}

impl fmt::Display for ToolCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn property_text(category: ToolCategory, variant: Option<Variant>, scope: Scope, optional: &[InfoKey]) -> String {
    let label = match variant {
        Some(v) => format!("{} {}", v.title(), category.name()),
        None => category.name().to_string(),
    };
    if scope.is_universal() {
        return format!("Universal {label}");
    }
    let mut text = format!("{label} only suitable for {} image", scope.phrase());
    if !optional.is_empty() {
        let masks = optional.iter().any(|k| matches!(k, InfoKey::OrganMask | InfoKey::AnomalyMask));
        text.push_str(if masks { " with Text and Mask" } else { " with Text" });
    }
    text
}

fn ability_text(category: ToolCategory, variant: Option<Variant>, scope: Scope) -> String {
    let target = match variant {
        Some(Variant::Organ) => "organ",
        Some(Variant::Anomaly) => "anomaly",
        None => "organ or anomaly",
    };
    if scope.is_universal() {
        return match category {
            ToolCategory::AnatomyClassifier => "Determine the anatomy of the Image.".into(),
            ToolCategory::ModalityClassifier => "Determine the modality of the Image.".into(),
            ToolCategory::OrganSegmentor => "Given the modality and anatomy, segment all organs in the Image.".into(),
            ToolCategory::AnomalyDetector => {
                "Given the modality and anatomy, determine the location and type of abnormality.".into()
            }
            ToolCategory::ImagingDiagnoser => {
                "Given the modality and anatomy, diagnose diseases directly from the input image.".into()
            }
            ToolCategory::GroundedDiagnoser => {
                "Infer disease based on organ segmentation and anomaly detection results.".into()
            }
            ToolCategory::BiomarkerQuantifier => format!("Measure the {target} biomarker of the Image."),
            ToolCategory::IndicatorEvaluator => {
                format!("Evaluate the clinical indicator from the {target} biomarker and patient information.")
            }
            ToolCategory::ReportGenerator => "Given the modality and anatomy, any other text information and \
                 organ/anomaly masks and labels, generate a radiology report."
                .into(),
            ToolCategory::TreatmentPlanner => {
                "Given the diagnosis, findings and patient information, recommend a treatment plan.".into()
            }
        };
    }
    let verb = match category {
        ToolCategory::AnatomyClassifier => "determine the anatomy".to_string(),
        ToolCategory::ModalityClassifier => "determine the modality".to_string(),
        ToolCategory::OrganSegmentor => "segment the organs".to_string(),
        ToolCategory::AnomalyDetector => "determine the location and type of abnormality".to_string(),
        ToolCategory::ImagingDiagnoser => "diagnose the disease".to_string(),
        ToolCategory::GroundedDiagnoser => {
            "infer the disease from organ segmentation and anomaly detection results".to_string()
        }
        ToolCategory::BiomarkerQuantifier => format!("measure the {target} biomarker"),
        ToolCategory::IndicatorEvaluator => format!("evaluate the clinical indicator from the {target} biomarker"),
        ToolCategory::ReportGenerator => {
            "any other text information and organ/anomaly masks and labels, generate a radiology report".to_string()
        }
        ToolCategory::TreatmentPlanner => "recommend a treatment plan".to_string(),
    };
    format!("Given the {} Image, {verb}.", scope.phrase())
}

fn split_ability(text: &str) -> (String, Vec<String>) {
    match text.find(LABEL_PREFIX) {
        Some(i) => {
            let list = text[i + LABEL_PREFIX.len()..].trim_end_matches('.');
            let labels = list.split(", ").map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            (text[..i].to_string(), labels)
        }
        None => (text.to_string(), Vec::new()),
    }
}

/// Scope and variant from a Property line.
fn parse_property(text: &str, category: ToolCategory) -> Result<(Scope, Option<Variant>), ToolError> {
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let variant_of = |label: &str| -> Option<Variant> {
        let l = label.trim().to_ascii_lowercase();
        if l.starts_with("organ ") && category.has_variants() {
            Some(Variant::Organ)
        } else if l.starts_with("anomaly ") && category.has_variants() {
            Some(Variant::Anomaly)
        } else {
            None
        }
    };
    if let Some(label) = text.strip_prefix("Universal ") {
        return Ok((Scope::UNIVERSAL, variant_of(label)));
    }
    let Some(i) = text.find(" only suitable for ") else {
        return Err(ToolError::Parse(format!("unrecognized property `{text}`")));
    };
    let label = &text[..i];
    let rest = &text[i + " only suitable for ".len()..];
    let phrase = rest.split(" image").next().unwrap_or(rest);
    let scope = Scope::parse_phrase(phrase).ok_or_else(|| ToolError::Parse(format!("unrecognized scope `{phrase}`")))?;
    Ok((scope, variant_of(label)))
}

const FIELDS: [&str; 8] =
    ["Name", "Category", "Ability", "Property", "Compulsory Input", "Optional Input", "Output", "Performance"];

/// Parse the text rendering produced by [`ToolCard::render`]. Field values
/// wrapped over several lines are joined with single spaces.
pub fn parse_tool_card(text: &str) -> Result<ToolCard, ToolError> {
    let mut fields: IndexMap<&str, String> = IndexMap::new();
    let mut current: Option<&str> = None;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("=== Tool Description") {
            continue;
        }
        let hit = FIELDS.iter().find(|f| trimmed.strip_prefix(**f).is_some_and(|r| r.starts_with(':')));
        match hit {
            Some(f) => {
                fields.insert(f, trimmed[f.len() + 1..].trim().to_string());
                current = Some(f);
            }
            None => {
                let Some(f) = current else {
                    return Err(ToolError::Parse(format!("unexpected line `{trimmed}`")));
                };
                let v = fields.get_mut(f).expect("current field present");
                v.push(' ');
                v.push_str(trimmed);
            }
        }
    }
    let get = |f: &str| fields.get(f).cloned().ok_or_else(|| ToolError::Parse(format!("missing field `{f}`")));
    let keys = |f: &str| -> Result<Vec<InfoKey>, ToolError> {
        scan_keys(&get(f)?).map_err(|e| ToolError::Parse(e.to_string()))
    };
    let optional = keys("Optional Input")?;
    let (lower, upper) = parse_performance(&get("Performance")?)?;
    let category_text = get("Category")?;
    let (category, alias_variant) =
        ToolCategory::resolve(&category_text).map_err(|e| ToolError::Parse(e.to_string()))?;
    let property = get("Property")?;
    let (scope, variant) = parse_property(&property, category)?;
    let (ability, labels) = split_ability(&get("Ability")?);
    let card = ToolCard {
        name: get("Name")?,
        category,
        variant: variant.or(alias_variant),
        property,
        ability,
        compulsory_input: keys("Compulsory Input")?,
        performance: Performance::ranged(lower, upper, optional.len()),
        optional_input: optional,
        output: keys("Output")?,
        scope,
        capability_labels: labels,
    };
    card.validate()?;
    Ok(card)
}

fn parse_performance(text: &str) -> Result<(f64, f64), ToolError> {
    let err = || ToolError::Parse(format!("unrecognized performance `{text}`"));
    let rest = text.trim().strip_prefix("Score from ").ok_or_else(err)?;
    let (lo, rest) = rest.split_once(" to ").ok_or_else(err)?;
    let hi = rest.split(',').next().ok_or_else(err)?;
    Ok((lo.trim().parse().map_err(|_| err())?, hi.trim().parse().map_err(|_| err())?))
}

/// JSON form of a tool card, field names as in the released tool sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCardJson {
    #[serde(rename = "Name")]
    pub name: String,
    #[serde(rename = "Category")]
    pub category: String,
    #[serde(rename = "Property")]
    pub property: String,
    #[serde(rename = "Ability")]
    pub ability: String,
    #[serde(rename = "Compulsory Input")]
    pub compulsory_input: Vec<InfoKey>,
    #[serde(rename = "Optional Input")]
    pub optional_input: Vec<InfoKey>,
    #[serde(rename = "Output")]
    pub output: Vec<InfoKey>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    #[serde(default)]
    pub step: f64,
    #[serde(rename = "Performance", default)]
    pub performance: String,
    #[serde(rename = "Anatomy", default)]
    pub anatomy: Option<String>,
    #[serde(rename = "Modality", default)]
    pub modality: Option<String>,
    #[serde(rename = "Organs", default)]
    pub organs: Option<Vec<String>>,
    #[serde(rename = "Anomalies", default)]
    pub anomalies: Option<Vec<String>>,
    #[serde(rename = "Diseases", default)]
    pub diseases: Option<Vec<String>>,
    #[serde(rename = "Biomarkers", default)]
    pub biomarkers: Option<Vec<String>>,
    #[serde(rename = "Indicators", default)]
    pub indicators: Option<Vec<String>>,
    #[serde(rename = "type", default)]
    pub variant: Option<Variant>,
}
