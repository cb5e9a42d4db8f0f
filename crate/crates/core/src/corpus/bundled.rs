//! The six bundled desk-scale records and loading of corpus directories.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::qa::{parse_qa_text, QaPair};
use super::record::{parse_patient_record, PatientRecord};
use super::task::TaskType;
use super::CorpusError;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub record: PatientRecord,
    pub qa: Vec<QaPair>,
}

impl CorpusEntry {
    pub fn qa_for(&self, task: TaskType) -> &QaPair {
        &self.qa[task.number() as usize - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn get(&self, record_id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.record.record_id == record_id)
    }

    fn push(&mut self, record: PatientRecord, qa_text: &str) -> Result<(), CorpusError> {
        if self.get(&record.record_id).is_some() {
            return Err(CorpusError::DuplicateRecord(record.record_id));
        }
        let qa = parse_qa_text(qa_text, &record.record_id)?;
        self.entries.push(CorpusEntry { record, qa });
        Ok(())
    }
}

const BUNDLED: [(&str, &str, &str); 6] = [
    (
        "head-and-neck__x-ray__sinusitis",
        include_str!("../../data/records/head-and-neck__x-ray__sinusitis.json"),
        include_str!("../../data/qa/head-and-neck__x-ray__sinusitis.txt"),
    ),
    (
        "chest__x-ray__pneumonia",
        include_str!("../../data/records/chest__x-ray__pneumonia.json"),
        include_str!("../../data/qa/chest__x-ray__pneumonia.txt"),
    ),
    (
        "breast__mammography__invasive-ductal-carcinoma",
        include_str!("../../data/records/breast__mammography__invasive-ductal-carcinoma.json"),
        include_str!("../../data/qa/breast__mammography__invasive-ductal-carcinoma.txt"),
    ),
    (
        "abdomen-and-pelvis__ct__acute-appendicitis",
        include_str!("../../data/records/abdomen-and-pelvis__ct__acute-appendicitis.json"),
        include_str!("../../data/qa/abdomen-and-pelvis__ct__acute-appendicitis.txt"),
    ),
    (
        "limb__x-ray__distal-radius-fracture",
        include_str!("../../data/records/limb__x-ray__distal-radius-fracture.json"),
        include_str!("../../data/qa/limb__x-ray__distal-radius-fracture.txt"),
    ),
    (
        "spine__mri__lumbar-disc-herniation",
        include_str!("../../data/records/spine__mri__lumbar-disc-herniation.json"),
        include_str!("../../data/qa/spine__mri__lumbar-disc-herniation.txt"),
    ),
];

/// One record per anatomy with its 11 QA pairs, compiled into the binary.
pub fn bundled_corpus() -> Corpus {
    let mut corpus = Corpus::default();
    for (name, record, qa) in BUNDLED {
        let record = parse_patient_record(record).unwrap_or_else(|e| panic!("bundled record {name}: {e}"));
        corpus.push(record, qa).unwrap_or_else(|e| panic!("bundled QA {name}: {e}"));
    }
    corpus
}

/// Load `<dir>/records/*.json` with the matching `<dir>/qa/<stem>.txt`.
/// Files are visited in name order.
pub fn load_corpus_dir(dir: &Path) -> Result<Corpus, CorpusError> {
    let io = |p: &Path, e: std::io::Error| CorpusError::Io { path: p.display().to_string(), message: e.to_string() };
    let records_dir = dir.join("records");
    let mut paths: Vec<_> = fs::read_dir(&records_dir)
        .map_err(|e| io(&records_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    for path in paths {
        let in_file = |p: &Path, e: CorpusError| CorpusError::InFile { path: p.display().to_string(), source: Box::new(e) };
        let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
        let record = parse_patient_record(&text).map_err(|e| in_file(&path, e))?;
        if !seen.insert(record.record_id.clone()) {
            return Err(CorpusError::DuplicateRecord(record.record_id));
        }
        let stem = path.file_stem().expect("file has a name").to_string_lossy().to_string();
        let qa_path = dir.join("qa").join(format!("{stem}.txt"));
        let qa_text = fs::read_to_string(&qa_path).map_err(|e| io(&qa_path, e))?;
        corpus.push(record, &qa_text).map_err(|e| in_file(&qa_path, e))?;
    }
    Ok(corpus)
}
