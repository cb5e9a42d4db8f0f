//! Patient records, QA pairs, the task table and corpus file handling.

mod bundled;
mod diseases;
mod generation;
mod qa;
mod record;
mod task;
mod taxonomy;

pub use bundled::{bundled_corpus, load_corpus_dir, Corpus, CorpusEntry};
pub use diseases::{parse_disease_csv, DiseaseEntry};
pub use generation::{render_generation_prompt, GenerationContext};
pub use qa::{leakage_terms, parse_qa_text, render_qa_text, QaPair};
pub use record::{
    parse_patient_record, record_id, Anomaly, Biomarker, BiomarkerDim, Indicator, PatientInfo, PatientRecord,
    Report, Sex,
};
pub use task::{ground_truth_spec, BadTask, ChainSlot, ChainStep, Complexity, TaskSpec, TaskType};
pub use taxonomy::{combinations, is_allowed_combination, Anatomy, Modality, UnknownTerm};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("illegal anatomy/modality combination: {anatomy} {modality}")]
    IllegalCombination { anatomy: Anatomy, modality: Modality },
    #[error("malformed numeric field `{0}`")]
    MalformedNumeric(String),
    #[error("invalid value `{value}` for `{field}`")]
    InvalidValue { field: String, value: String },
    #[error("record syntax error: {0}")]
    Syntax(String),
    #[error("missing QA tag {0}")]
    MissingTag(u8),
    #[error("unbalanced QA tag {0}")]
    UnbalancedTag(u8),
    #[error("duplicate QA tag {0}")]
    DuplicateTag(u8),
    #[error("unexpected QA tag {0}")]
    UnexpectedTag(u8),
    #[error("unknown generation prompt kind `{0}`")]
    UnknownKind(String),
    #[error("generation context is missing {0}")]
    IncompleteContext(&'static str),
    #[error("duplicate record id `{0}`")]
    DuplicateRecord(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {source}")]
    InFile { path: String, source: Box<CorpusError> },
}
