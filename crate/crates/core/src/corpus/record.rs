//! Patient records in the released corpus format.
//!
//! A record file is a single JSON-style object keyed by `Information`,
//! `Anatomy`, `Modality`, `Anomaly`, `Disease`, `OrganBiomarker`,
//! `AnomalyBiomarker`, `Indicator`, `Report` and `Treatment`. All leaf values
//! are strings in the released files; numeric leaves are tolerated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::taxonomy::{is_allowed_combination, Anatomy, Modality};
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn name(self) -> &'static str {
        match self {
            Sex::Male => "Male",
            Sex::Female => "Female",
        }
    }
}

/// Measurement dimension of a biomarker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiomarkerDim {
    Number,
    Length,
    Size,
    Volume,
    Angle,
    Density,
    Intensity,
    Texture,
}

impl BiomarkerDim {
    pub const ALL: [BiomarkerDim; 8] = [
        BiomarkerDim::Number,
        BiomarkerDim::Length,
        BiomarkerDim::Size,
        BiomarkerDim::Volume,
        BiomarkerDim::Angle,
        BiomarkerDim::Density,
        BiomarkerDim::Intensity,
        BiomarkerDim::Texture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BiomarkerDim::Number => "number",
            BiomarkerDim::Length => "length",
            BiomarkerDim::Size => "size",
            BiomarkerDim::Volume => "volume",
            BiomarkerDim::Angle => "angle",
            BiomarkerDim::Density => "density",
            BiomarkerDim::Intensity => "intensity",
            BiomarkerDim::Texture => "texture",
        }
    }
}

impl fmt::Display for BiomarkerDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BiomarkerDim {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        BiomarkerDim::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientInfo {
    pub age: u32,
    pub sex: Sex,
    /// Centimetres.
    pub height: u32,
    /// Kilograms.
    pub weight: u32,
    pub history: String,
    pub complaint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anomaly {
    pub part: String,
    pub symptom: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Biomarker {
    pub object: String,
    pub dim: BiomarkerDim,
    pub quant: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub finding: String,
    pub impression: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub record_id: String,
    pub info: PatientInfo,
    pub anatomy: Anatomy,
    pub modality: Modality,
    pub anomaly: Anomaly,
    pub disease: String,
    pub organ_biomarker: Biomarker,
    pub anomaly_biomarker: Biomarker,
    pub indicator: Indicator,
    pub report: Report,
    pub treatment: String,
}

/// Stable identifier for a record: its (anatomy, modality, disease) slug.
pub fn record_id(anatomy: Anatomy, modality: Modality, disease: &str) -> String {
    format!("{}__{}__{}", slug(anatomy.name()), slug(modality.name()), slug(disease))
}

fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut dash = false;
    for c in s.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
            dash = false;
        } else if !dash && !out.is_empty() {
            out.push('-');
            dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

impl PatientRecord {
    /// Text used for the `$Information$` slot of the agent prompts.
    pub fn information_json(&self) -> String {
        let info = &self.info;
        let obj = serde_json::json!({
            "Age": info.age.to_string(),
            "Sex": info.sex.name(),
            "Height": info.height.to_string(),
            "Weight": info.weight.to_string(),
            "History": info.history,
            "Complaint": info.complaint,
        });
        serde_json::to_string_pretty(&obj).expect("json object serializes")
    }

    pub fn report_text(&self) -> String {
        format!("Finding: {} Impression: {}", self.report.finding, self.report.impression)
    }

    /// Serialize to the corpus record format.
    pub fn to_record_json(&self) -> String {
        let info = &self.info;
        let obj = serde_json::json!({
            "Information": {
                "Age": info.age.to_string(),
                "Sex": info.sex.name(),
                "Height": info.height.to_string(),
                "Weight": info.weight.to_string(),
                "History": info.history,
                "Complaint": info.complaint,
            },
            "Anatomy": self.anatomy.name(),
            "Modality": self.modality.name(),
            "Anomaly": {"Part": self.anomaly.part, "Symptom": self.anomaly.symptom},
            "Disease": self.disease,
            "OrganBiomarker": {
                "OrganObject": self.organ_biomarker.object,
                "OrganDim": self.organ_biomarker.dim.name(),
                "OrganQuant": self.organ_biomarker.quant,
            },
            "AnomalyBiomarker": {
                "AnomalyObject": self.anomaly_biomarker.object,
                "AnomalyDim": self.anomaly_biomarker.dim.name(),
                "AnomalyQuant": self.anomaly_biomarker.quant,
            },
            "Indicator": {"Name": self.indicator.name, "Value": self.indicator.value},
            "Report": {"Finding": self.report.finding, "Impression": self.report.impression},
            "Treatment": self.treatment,
        });
        serde_json::to_string_pretty(&obj).expect("json object serializes")
    }
}

/// Parse one record. The outer braces may be omitted, as in the published
/// sample.
pub fn parse_patient_record(text: &str) -> Result<PatientRecord, CorpusError> {
    // Published records wrap long strings over raw newlines.
    let flat: String = text.chars().map(|c| if c.is_control() { ' ' } else { c }).collect();
    let trimmed = flat.trim();
    let value: Value = if trimmed.starts_with('{') {
        serde_json::from_str(trimmed)
    } else {
        serde_json::from_str(&format!("{{{trimmed}}}"))
    }
    .map_err(|e| CorpusError::Syntax(e.to_string()))?;
    let root = value
        .as_object()
        .ok_or_else(|| CorpusError::Syntax("record is not an object".into()))?;

    let info = object(root, "Information")?;
    let age = positive_int(text_field(info, "Age")?, "Age")?;
    let sex = match text_field(info, "Sex")?.to_ascii_lowercase().as_str() {
        "male" | "m" => Sex::Male,
        "female" | "f" => Sex::Female,
        other => return Err(CorpusError::InvalidValue { field: "Sex".into(), value: other.into() }),
    };
    let height = rounded_int(text_field(info, "Height")?, "Height")?;
    let weight = rounded_int(text_field(info, "Weight")?, "Weight")?;
    let history = text_field(info, "History")?;
    let complaint = text_field(info, "Complaint")?;

    let anatomy_text = text_field(root, "Anatomy")?;
    let modality_text = text_field(root, "Modality")?;
    let anatomy: Anatomy = anatomy_text
        .parse()
        .map_err(|_| CorpusError::InvalidValue { field: "Anatomy".into(), value: anatomy_text.clone() })?;
    let modality: Modality = modality_text
        .parse()
        .map_err(|_| CorpusError::InvalidValue { field: "Modality".into(), value: modality_text.clone() })?;
    if !is_allowed_combination(anatomy, modality) {
        return Err(CorpusError::IllegalCombination { anatomy, modality });
    }

    let anomaly_obj = object(root, "Anomaly")?;
    let anomaly = Anomaly {
        part: text_field(anomaly_obj, "Part")?,
        symptom: text_field(anomaly_obj, "Symptom")?,
    };
    let disease = text_field(root, "Disease")?;
    let organ_biomarker = biomarker(object(root, "OrganBiomarker")?, "Organ")?;
    let anomaly_biomarker = biomarker(object(root, "AnomalyBiomarker")?, "Anomaly")?;
    let ind = object(root, "Indicator")?;
    let indicator = Indicator { name: text_field(ind, "Name")?, value: text_field(ind, "Value")? };
    let rep = object(root, "Report")?;
    let report = Report { finding: text_field(rep, "Finding")?, impression: text_field(rep, "Impression")? };
    let treatment = text_field(root, "Treatment")?;

    Ok(PatientRecord {
        record_id: record_id(anatomy, modality, &disease),
        info: PatientInfo { age, sex, height, weight, history, complaint },
        anatomy,
        modality,
        anomaly,
        disease,
        organ_biomarker,
        anomaly_biomarker,
        indicator,
        report,
        treatment,
    })
}

fn biomarker(obj: &Map<String, Value>, prefix: &str) -> Result<Biomarker, CorpusError> {
    let dim_key = format!("{prefix}Dim");
    let dim_text = text_field(obj, &dim_key)?;
    let dim = dim_text
        .parse()
        .map_err(|_| CorpusError::InvalidValue { field: dim_key.clone(), value: dim_text.clone() })?;
    Ok(Biomarker {
        object: text_field(obj, &format!("{prefix}Object"))?,
        dim,
        quant: text_field(obj, &format!("{prefix}Quant"))?,
    })
}

fn object<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Map<String, Value>, CorpusError> {
    match obj.get(key) {
        Some(Value::Object(m)) => Ok(m),
        Some(_) => Err(CorpusError::Syntax(format!("`{key}` must be an object"))),
        None => Err(CorpusError::MissingField(key.to_string())),
    }
}

/// Whitespace-normalized non-empty text leaf.
fn text_field(obj: &Map<String, Value>, key: &str) -> Result<String, CorpusError> {
    let raw = match obj.get(key) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Null) | None => return Err(CorpusError::MissingField(key.to_string())),
        Some(_) => return Err(CorpusError::Syntax(format!("`{key}` must be a string"))),
    };
    let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if text.is_empty() {
        return Err(CorpusError::MissingField(key.to_string()));
    }
    Ok(text)
}

fn positive_int(text: String, field: &str) -> Result<u32, CorpusError> {
    match text.trim().parse::<u32>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(CorpusError::MalformedNumeric(field.to_string())),
    }
}

/// Integer, or a decimal rounded half-up.
fn rounded_int(text: String, field: &str) -> Result<u32, CorpusError> {
    let t = text.trim();
    if let Ok(v) = t.parse::<u32>() {
        return if v > 0 { Ok(v) } else { Err(CorpusError::MalformedNumeric(field.to_string())) };
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 && v < u32::MAX as f64 => Ok((v + 0.5).floor() as u32),
        _ => Err(CorpusError::MalformedNumeric(field.to_string())),
    }
}
