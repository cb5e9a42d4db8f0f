use serde::{Deserialize, Serialize};

use super::taxonomy::{is_allowed_combination, Anatomy, Modality};
use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiseaseEntry {
    pub anatomy: Anatomy,
    pub modality: Modality,
    pub disease: String,
}

#[derive(Deserialize)]
struct Row {
    anatomy: String,
    modality: String,
    disease: String,
}

/// Parse the disease list: one `anatomy,modality,disease` row per entry.
pub fn parse_disease_csv(text: &str) -> Result<Vec<DiseaseEntry>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| CorpusError::Syntax(e.to_string()))?;
        let anatomy: Anatomy = row
            .anatomy
            .parse()
            .map_err(|_| CorpusError::InvalidValue { field: "anatomy".into(), value: row.anatomy.clone() })?;
        let modality: Modality = row
            .modality
            .parse()
            .map_err(|_| CorpusError::InvalidValue { field: "modality".into(), value: row.modality.clone() })?;
        if !is_allowed_combination(anatomy, modality) {
            return Err(CorpusError::IllegalCombination { anatomy, modality });
        }
        if row.disease.is_empty() {
            return Err(CorpusError::MissingField("disease".into()));
        }
        out.push(DiseaseEntry { anatomy, modality, disease: row.disease });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_covers_every_combination() {
        let rows = parse_disease_csv(include_str!("../../data/diseases.csv")).unwrap();
        for (a, m) in crate::corpus::combinations() {
            assert!(rows.iter().any(|r| r.anatomy == a && r.modality == m), "{a} {m}");
        }
        assert!(parse_disease_csv("anatomy,modality,disease\nBreast,X-ray,Mass\n").is_err());
    }
}
