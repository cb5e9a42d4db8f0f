use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Anatomy, Modality, PatientRecord};
use crate::tools::InfoKey;

/// Session memory: produced values, their scores, and the fixed initial
/// entries that can never be overwritten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryBank {
    pub values: IndexMap<InfoKey, String>,
    pub scores: IndexMap<InfoKey, f64>,
    pub fixed: IndexMap<InfoKey, f64>,
}

impl Default for MemoryBank {
    fn default() -> Self {
        MemoryBank::new()
    }
}

impl MemoryBank {
    pub fn new() -> MemoryBank {
        let mut values = IndexMap::new();
        values.insert(InfoKey::Image, "PLACEHOLDER_IMAGE".to_string());
        values.insert(InfoKey::Information, "PLACEHOLDER_INFORMATION".to_string());
        let fixed: IndexMap<InfoKey, f64> = [(InfoKey::Image, 1.0), (InfoKey::Information, 1.0)].into_iter().collect();
        MemoryBank { values, scores: fixed.clone(), fixed }
    }

    pub fn contains(&self, key: InfoKey) -> bool {
        self.values.contains_key(&key)
    }

    pub fn get(&self, key: InfoKey) -> Option<&str> {
        self.values.get(&key).map(|s| s.as_str())
    }

    pub fn mask(&self) -> u32 {
        self.values.keys().fold(0, |m, k| m | k.bit())
    }

    /// Store a value. Returns false (and changes nothing) for fixed keys.
    pub fn set(&mut self, key: InfoKey, value: String, score: f64) -> bool {
        if self.fixed.contains_key(&key) {
            return false;
        }
        self.values.insert(key, value);
        self.scores.insert(key, score);
        true
    }

    /// Anatomy resolved in the bank, if any and recognisable.
    pub fn anatomy(&self) -> Option<Anatomy> {
        self.get(InfoKey::Anatomy).and_then(|s| s.parse().ok())
    }

    pub fn modality(&self) -> Option<Modality> {
        self.get(InfoKey::Modality).and_then(|s| s.parse().ok())
    }

    /// `{'$Image$': 'PLACEHOLDER_IMAGE', ...}`
    pub fn render_values(&self) -> String {
        let items: Vec<String> = self.values.iter().map(|(k, v)| format!("'{}': {}", k.as_str(), py_str(v))).collect();
        format!("{{{}}}", items.join(", "))
    }

    /// `{'$Image$': 1.0, ...}`
    pub fn render_scores(&self) -> String {
        render_score_map(&self.scores)
    }

    pub fn render_fixed(&self) -> String {
        format!("frozendict.frozendict({})", render_score_map(&self.fixed))
    }
}

fn render_score_map(map: &IndexMap<InfoKey, f64>) -> String {
    let items: Vec<String> = map.iter().map(|(k, v)| format!("'{}': {:?}", k.as_str(), v)).collect();
    format!("{{{}}}", items.join(", "))
}

/// Python `repr` of a string.
pub fn py_str(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// Ground-truth value a tool writes for `key` on `record`.
pub fn record_value(key: InfoKey, record: &PatientRecord) -> String {
    match key {
        InfoKey::Image => "PLACEHOLDER_IMAGE".to_string(),
        InfoKey::Information => "PLACEHOLDER_INFORMATION".to_string(),
        InfoKey::OrganMask | InfoKey::AnomalyMask => format!("PLACEHOLDER_{}", key.as_str()),
        InfoKey::Anatomy => record.anatomy.name().to_string(),
        InfoKey::Modality => record.modality.name().to_string(),
        InfoKey::Disease => record.disease.clone(),
        InfoKey::OrganObject => record.organ_biomarker.object.clone(),
        InfoKey::OrganDim => record.organ_biomarker.dim.name().to_string(),
        InfoKey::OrganQuant => record.organ_biomarker.quant.clone(),
        InfoKey::AnomalyObject => record.anomaly_biomarker.object.clone(),
        InfoKey::AnomalyDim => record.anomaly_biomarker.dim.name().to_string(),
        InfoKey::AnomalyQuant => record.anomaly_biomarker.quant.clone(),
        InfoKey::IndicatorName => record.indicator.name.clone(),
        InfoKey::IndicatorValue => record.indicator.value.clone(),
        InfoKey::Report => record.report_text(),
        InfoKey::Treatment => record.treatment.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_rendering() {
        let mut bank = MemoryBank::new();
        assert_eq!(bank.render_values(), "{'$Image$': 'PLACEHOLDER_IMAGE', '$Information$': 'PLACEHOLDER_INFORMATION'}");
        assert_eq!(bank.render_scores(), "{'$Image$': 1.0, '$Information$': 1.0}");
        assert_eq!(bank.render_fixed(), "frozendict.frozendict({'$Image$': 1.0, '$Information$': 1.0})");
        assert!(!bank.set(InfoKey::Image, "x".into(), 0.1));
        assert!(bank.set(InfoKey::Anatomy, "Head and Neck".into(), 0.95));
        assert_eq!(
            bank.render_scores(),
            "{'$Image$': 1.0, '$Information$': 1.0, '$Anatomy$': 0.95}"
        );
        assert_eq!(bank.anatomy(), Some(Anatomy::HeadAndNeck));
    }

    #[test]
    fn python_quoting() {
        assert_eq!(py_str("it's"), "\"it's\"");
        assert_eq!(py_str("a'b\"c"), "'a\\'b\"c'");
        assert_eq!(py_str("x\ny"), "'x\\ny'");
    }
}
