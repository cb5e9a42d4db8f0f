//! The eleven task types and their ground-truth tool chains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::tools::{InfoKey, ToolCategory, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskType(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("task number must be 1..=11, got `{0}`")]
pub struct BadTask(pub String);

impl TaskType {
    pub fn new(n: u8) -> Result<TaskType, BadTask> {
        if (1..=11).contains(&n) {
            Ok(TaskType(n))
        } else {
            Err(BadTask(n.to_string()))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = TaskType> {
        (1..=11).map(TaskType)
    }

    pub fn title(self) -> &'static str {
        match self.0 {
            1 => "Organ segmentation",
            2 => "Anomaly detection",
            3 => "Standard end-to-end diagnosis",
            4 => "Organ and anomaly joint grounding",
            5 => "Diagnosis with grounding clues",
            6 => "Organ-wise biomarker calculation",
            7 => "Anomaly-wise biomarker calculation",
            8 => "Common report generation",
            9 => "Report generation focusing on specific biomarkers",
            10 => "Report generation focusing on specific biomarkers and indicators",
            _ => "Treatment planning",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for TaskType {
    type Err = BadTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t.strip_prefix("task").or_else(|| t.strip_prefix('T')).unwrap_or(t);
        digits.trim().parse::<u8>().ok().and_then(|n| TaskType::new(n).ok()).ok_or_else(|| BadTask(t.to_string()))
    }
}

impl Serialize for TaskType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for TaskType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = u8::deserialize(d)?;
        TaskType::new(n).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Complexity {
    Simple,
    Moderate,
    Complex,
}

impl Complexity {
    pub fn from_length(len: usize) -> Complexity {
        match len {
            0..=3 => Complexity::Simple,
            4..=5 => Complexity::Moderate,
            _ => Complexity::Complex,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Complexity::Simple => "Simple",
            Complexity::Moderate => "Moderate",
            Complexity::Complex => "Complex",
        }
    }
}

/// One tool position in a chain. Biomarker and indicator slots may name the
/// organ or anomaly flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainSlot {
    pub category: ToolCategory,
    pub variant: Option<Variant>,
}

impl ChainSlot {
    pub fn plain(category: ToolCategory) -> ChainSlot {
        ChainSlot { category, variant: None }
    }
}

/// A chain step: a single slot, or a parallel group executed in any order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub slots: Vec<ChainSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: TaskType,
    pub gt_chain: Vec<ChainStep>,
    pub terminal_category: ToolCategory,
    pub milestone_key: InfoKey,
    pub complexity: Complexity,
}

impl TaskSpec {
    pub fn linear_len(&self) -> usize {
        self.gt_chain.iter().map(|s| s.slots.len()).sum()
    }

    /// Every slot ordering obtained by permuting each parallel group.
    pub fn slot_linearizations(&self) -> Vec<Vec<ChainSlot>> {
        let mut out: Vec<Vec<ChainSlot>> = vec![Vec::new()];
        for step in &self.gt_chain {
            let perms = permutations(&step.slots);
            let mut next = Vec::with_capacity(out.len() * perms.len());
            for prefix in &out {
                for p in &perms {
                    let mut v = prefix.clone();
                    v.extend_from_slice(p);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    /// Distinct category sequences of the linearizations.
    pub fn linearizations(&self) -> Vec<Vec<ToolCategory>> {
        let mut out: Vec<Vec<ToolCategory>> = Vec::new();
        for lin in self.slot_linearizations() {
            let cats: Vec<ToolCategory> = lin.iter().map(|s| s.category).collect();
            if !out.contains(&cats) {
                out.push(cats);
            }
        }
        out
    }

    /// Category multiset of the chain, in chain order.
    pub fn categories(&self) -> Vec<ToolCategory> {
        self.gt_chain.iter().flat_map(|s| s.slots.iter().map(|x| x.category)).collect()
    }

    pub fn last_group(&self) -> &[ChainSlot] {
        &self.gt_chain.last().expect("chains are non-empty").slots
    }
}

fn permutations(slots: &[ChainSlot]) -> Vec<Vec<ChainSlot>> {
    if slots.len() <= 1 {
        return vec![slots.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..slots.len() {
        let mut rest = slots.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Fixed ground-truth table for the eleven tasks.
pub fn ground_truth_spec(task: TaskType) -> TaskSpec {
    use ToolCategory::*;
    let one = |c: ToolCategory| ChainStep { slots: vec![ChainSlot::plain(c)] };
    let grounding = ChainStep { slots: vec![ChainSlot::plain(OrganSegmentor), ChainSlot::plain(AnomalyDetector)] };
    let bq = |v: Variant| ChainStep { slots: vec![ChainSlot { category: BiomarkerQuantifier, variant: Some(v) }] };
    let bq_pair = ChainStep {
        slots: vec![
            ChainSlot { category: BiomarkerQuantifier, variant: Some(Variant::Organ) },
            ChainSlot { category: BiomarkerQuantifier, variant: Some(Variant::Anomaly) },
        ],
    };
    let mut chain = vec![one(AnatomyClassifier), one(ModalityClassifier)];
    let (tail, milestone): (Vec<ChainStep>, InfoKey) = match task.0 {
        1 => (vec![one(OrganSegmentor)], InfoKey::OrganMask),
        2 => (vec![one(AnomalyDetector)], InfoKey::AnomalyMask),
        3 => (vec![one(ImagingDiagnoser)], InfoKey::Disease),
        4 => (vec![grounding], InfoKey::OrganMask),
        5 => (vec![grounding, one(GroundedDiagnoser)], InfoKey::Disease),
        6 => (vec![one(OrganSegmentor), bq(Variant::Organ)], InfoKey::OrganQuant),
        7 => (vec![one(AnomalyDetector), bq(Variant::Anomaly)], InfoKey::AnomalyMask),
        8 => (vec![one(AnomalyDetector), one(ImagingDiagnoser), one(ReportGenerator)], InfoKey::Disease),
        9 => (vec![grounding, bq_pair, one(ReportGenerator)], InfoKey::AnomalyQuant),
        10 => (
            vec![grounding, one(ImagingDiagnoser), bq_pair, one(IndicatorEvaluator), one(ReportGenerator)],
            InfoKey::Disease,
        ),
        _ => (
            vec![
                grounding,
                one(ImagingDiagnoser),
                bq_pair,
                one(IndicatorEvaluator),
                one(ReportGenerator),
                one(TreatmentPlanner),
            ],
            InfoKey::Report,
        ),
    };
    chain.extend(tail);
    let terminal = chain.last().and_then(|s| s.slots.last()).expect("non-empty").category;
    let len = chain.iter().map(|s| s.slots.len()).sum();
    TaskSpec { task, gt_chain: chain, terminal_category: terminal, milestone_key: milestone, complexity: Complexity::from_length(len) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ToolCategory::*;

    fn t(n: u8) -> TaskSpec {
        ground_truth_spec(TaskType::new(n).unwrap())
    }

    #[test]
    fn task_table_rows() {
        let t3 = t(3);
        assert_eq!(t3.linearizations(), vec![vec![AnatomyClassifier, ModalityClassifier, ImagingDiagnoser]]);
        assert_eq!(t3.terminal_category, ImagingDiagnoser);
        assert_eq!(t(1).complexity, Complexity::Simple);
        assert_eq!(t(11).terminal_category, TreatmentPlanner);
        assert_eq!(t(11).complexity, Complexity::Complex);
        assert_eq!(t(4).linearizations().len(), 2);
        assert_eq!(t(8).categories(), [AnatomyClassifier, ModalityClassifier, AnomalyDetector, ImagingDiagnoser, ReportGenerator]);
        let lens: Vec<usize> = TaskType::all().map(|k| ground_truth_spec(k).linear_len()).collect();
        assert_eq!(lens, [3, 3, 3, 4, 5, 4, 4, 5, 7, 9, 10]);
    }

    #[test]
    fn chains_start_with_classifiers_and_linearizations_agree() {
        for task in TaskType::all() {
            let spec = ground_truth_spec(task);
            assert_eq!(spec.gt_chain[0].slots, [ChainSlot::plain(AnatomyClassifier)]);
            assert_eq!(spec.gt_chain[1].slots, [ChainSlot::plain(ModalityClassifier)]);
            for lin in spec.slot_linearizations() {
                assert_eq!(lin.len(), spec.linear_len());
            }
            assert_eq!(spec.complexity, Complexity::from_length(spec.linear_len()));
        }
    }

    #[test]
    fn task_parsing() {
        assert_eq!("7".parse::<TaskType>().unwrap().number(), 7);
        assert_eq!("T11".parse::<TaskType>().unwrap().number(), 11);
        assert!("12".parse::<TaskType>().is_err());
        assert!(TaskType::new(0).is_err());
    }
}
