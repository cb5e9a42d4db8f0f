//! Task-related question/answer pairs in the `<Qk>..</Qk>` / `<Ak>..</Ak>`
//! tag format.

use serde::{Deserialize, Serialize};

use super::record::PatientRecord;
use super::task::TaskType;
use super::taxonomy::{Anatomy, Modality};
use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub task: TaskType,
    pub question: String,
    pub answer: String,
    pub record_id: String,
}

impl QaPair {
    pub fn id(&self) -> String {
        format!("{}#{}", self.record_id, self.task)
    }
}

/// Parse the 11 tagged pairs of one record, returned in task order.
pub fn parse_qa_text(text: &str, record_id: &str) -> Result<Vec<QaPair>, CorpusError> {
    let mut pairs = Vec::with_capacity(11);
    for k in 1..=11u8 {
        let question = tag_body(text, 'Q', k)?;
        let answer = tag_body(text, 'A', k)?;
        pairs.push(QaPair {
            task: TaskType::new(k).expect("1..=11"),
            question,
            answer,
            record_id: record_id.to_string(),
        });
    }
    for extra in 12..=99u8 {
        if text.contains(&format!("<Q{extra}>")) {
            return Err(CorpusError::UnexpectedTag(extra));
        }
    }
    Ok(pairs)
}

fn tag_body(text: &str, letter: char, k: u8) -> Result<String, CorpusError> {
    let open = format!("<{letter}{k}>");
    let close = format!("</{letter}{k}>");
    let opens: Vec<usize> = text.match_indices(&open).map(|(i, _)| i).collect();
    let closes: Vec<usize> = text.match_indices(&close).map(|(i, _)| i).collect();
    match (opens.len(), closes.len()) {
        (0, 0) => Err(CorpusError::MissingTag(k)),
        (o, c) if o > 1 || c > 1 => Err(CorpusError::DuplicateTag(k)),
        (1, 1) if opens[0] < closes[0] => {
            let body = &text[opens[0] + open.len()..closes[0]];
            let body = body.split_whitespace().collect::<Vec<_>>().join(" ");
            if body.is_empty() {
                Err(CorpusError::MissingTag(k))
            } else {
                Ok(body)
            }
        }
        _ => Err(CorpusError::UnbalancedTag(k)),
    }
}

/// Render pairs back into the tagged block format.
pub fn render_qa_text(pairs: &[QaPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let k = p.task.number();
        out.push_str(&format!("<Q{k}> {} </Q{k}>\n<A{k}> {} </A{k}>\n", p.question, p.answer));
    }
    out
}

/// Best-effort check for questions that reveal what the classifier tools
/// are supposed to determine. Returns the leaked terms.
pub fn leakage_terms(question: &str, record: &PatientRecord) -> Vec<String> {
    let lower = question.to_lowercase();
    let mut terms: Vec<String> = Vec::new();
    let mut push = |t: &str| {
        if !terms.iter().any(|x| x == t) {
            terms.push(t.to_string());
        }
    };
    for m in Modality::ALL {
        let words: &[&str] = match m {
            Modality::XRay => &["x-ray", "xray", "radiograph"],
            Modality::Ct => &[" ct ", " ct.", " ct,", " ct?", "computed tomography"],
            Modality::Mri => &["mri", "magnetic resonance"],
            Modality::Ultrasound => &["ultrasound", "sonograph"],
            Modality::Mammography => &["mammogra"],
        };
        let padded = format!(" {lower} ");
        if words.iter().any(|w| padded.contains(w)) {
            push(m.name());
        }
    }
    let anatomy_words: &[&str] = match record.anatomy {
        Anatomy::HeadAndNeck => &["head and neck", "sinus", "neck"],
        Anatomy::Chest => &["chest", "thorax"],
        Anatomy::Breast => &["breast"],
        Anatomy::AbdomenAndPelvis => &["abdomen", "abdominal", "pelvis", "pelvic"],
        Anatomy::Limb => &["limb", "wrist", "arm", "leg"],
        Anatomy::Spine => &["spine", "spinal", "lumbar", "vertebra"],
    };
    for w in anatomy_words {
        if lower.contains(w) {
            push(record.anatomy.name());
        }
    }
    if lower.contains(&record.disease.to_lowercase()) {
        push(&record.disease);
    }
    terms
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(skip: Option<u8>) -> String {
        let mut s = String::new();
        for k in 1..=11u8 {
            if Some(k) == skip {
                continue;
            }
            s.push_str(&format!("<Q{k}> question {k} </Q{k}>\n<A{k}> answer\n {k} </A{k}>\n"));
        }
        s
    }

    #[test]
    fn eleven_pairs_in_order() {
        let pairs = parse_qa_text(&block(None), "r").unwrap();
        assert_eq!(pairs.len(), 11);
        assert_eq!(pairs[6].task.number(), 7);
        assert_eq!(pairs[6].answer, "answer 7");
        assert_eq!(parse_qa_text(&render_qa_text(&pairs), "r").unwrap(), pairs);
    }

    #[test]
    fn tag_errors() {
        assert_eq!(parse_qa_text(&block(Some(11)), "r").unwrap_err(), CorpusError::MissingTag(11));
        let dup = block(None).replace("<Q3> question 3", "<Q3> <Q3> question 3");
        assert_eq!(parse_qa_text(&dup, "r").unwrap_err(), CorpusError::DuplicateTag(3));
        let unclosed = block(None).replace("</A5>", "");
        assert_eq!(parse_qa_text(&unclosed, "r").unwrap_err(), CorpusError::UnbalancedTag(5));
    }
}
