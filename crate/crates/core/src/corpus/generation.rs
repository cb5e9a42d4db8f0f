//! Prompts used to synthesize records and QA pairs with an external model.

use super::record::PatientRecord;
use super::taxonomy::{Anatomy, Modality};
use super::CorpusError;

const RECORD_TEMPLATE: &str = include_str!("../../prompts/generation/record.txt");
const QA_TEMPLATE: &str = include_str!("../../prompts/generation/qa.txt");

#[derive(Debug, Clone, Default)]
pub struct GenerationContext<'a> {
    pub anatomy: Option<Anatomy>,
    pub modality: Option<Modality>,
    pub disease: Option<&'a str>,
    pub record: Option<&'a PatientRecord>,
}

/// Instantiate the record (`kind = "record"`) or QA (`kind = "qa"`)
/// generation prompt.
pub fn render_generation_prompt(kind: &str, ctx: &GenerationContext<'_>) -> Result<String, CorpusError> {
    match kind.trim().to_ascii_lowercase().as_str() {
        "record" => {
            let anatomy = ctx.anatomy.ok_or(CorpusError::IncompleteContext("anatomy"))?;
            let modality = ctx.modality.ok_or(CorpusError::IncompleteContext("modality"))?;
            let disease = ctx.disease.filter(|d| !d.trim().is_empty()).ok_or(CorpusError::IncompleteContext("disease"))?;
            Ok(template(RECORD_TEMPLATE)
                .replace("{ANATOMY}", anatomy.name())
                .replace("{MODALITY}", modality.name())
                .replace("{DISEASE}", disease.trim()))
        }
        "qa" => {
            let record = ctx.record.ok_or(CorpusError::IncompleteContext("record"))?;
            Ok(template(QA_TEMPLATE).replace("{Patient Record}", &record.to_record_json()))
        }
        other => Err(CorpusError::UnknownKind(other.to_string())),
    }
}

fn template(raw: &str) -> &str {
    raw.strip_suffix('\n').unwrap_or(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bundled_corpus;

    #[test]
    fn record_prompt_tail() {
        let ctx = GenerationContext {
            anatomy: Some(Anatomy::Chest),
            modality: Some(Modality::XRay),
            disease: Some("Pneumonia"),
            record: None,
        };
        let text = render_generation_prompt("record", &ctx).unwrap();
        assert!(text.ends_with("- Disease: Pneumonia\nPlease generate this patient record."));
        assert!(text.contains("- Anatomy: Chest\n- Imaging Modality: X-ray\n"));
        assert!(!text.contains('{') || !text.contains("{DISEASE}"));
    }

    #[test]
    fn qa_prompt_embeds_record() {
        let corpus = bundled_corpus();
        let record = &corpus.entries[0].record;
        let ctx = GenerationContext { record: Some(record), ..Default::default() };
        let text = render_generation_prompt("qa", &ctx).unwrap();
        assert!(text.contains("Please generate 11 mutually independent question-answer pairs"));
        assert!(text.contains(&record.to_record_json()));
        assert!(!text.contains("{Patient Record}"));
    }

    #[test]
    fn errors() {
        let ctx = GenerationContext { anatomy: Some(Anatomy::Chest), modality: Some(Modality::XRay), ..Default::default() };
        assert_eq!(render_generation_prompt("record", &ctx).unwrap_err(), CorpusError::IncompleteContext("disease"));
        assert_eq!(render_generation_prompt("poem", &ctx).unwrap_err(), CorpusError::UnknownKind("poem".into()));
    }
}
