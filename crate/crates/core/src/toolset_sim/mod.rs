//! Seeded tool-set generation for the eight availability conditions and a
//! brute-force solvability oracle.

mod generate;
mod oracle;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Anatomy, ChainSlot, Modality, PatientRecord, TaskType};
use crate::tools::{ToolCard, ToolCardJson, ToolCategory, ToolError, Variant};

pub use generate::{build_toolset, high_manifest, label_pool};
pub use oracle::{classify_blocked_slot, solvability_oracle, SolvabilityVerdict, MAX_EXPANSIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Baseline,
    RedundantRegular,
    RedundantMedium,
    RedundantHigh,
    InsufficientConfig1,
    InsufficientConfig2,
    InsufficientConfig3,
    Differentiated,
}

impl Condition {
    pub const ALL: [Condition; 8] = [
        Condition::Baseline,
        Condition::RedundantRegular,
        Condition::RedundantMedium,
        Condition::RedundantHigh,
        Condition::InsufficientConfig1,
        Condition::InsufficientConfig2,
        Condition::InsufficientConfig3,
        Condition::Differentiated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "Baseline",
            Condition::RedundantRegular => "RedundantRegular",
            Condition::RedundantMedium => "RedundantMedium",
            Condition::RedundantHigh => "RedundantHigh",
            Condition::InsufficientConfig1 => "InsufficientConfig1",
            Condition::InsufficientConfig2 => "InsufficientConfig2",
            Condition::InsufficientConfig3 => "InsufficientConfig3",
            Condition::Differentiated => "Differentiated",
        }
    }

    pub fn is_insufficient(self) -> bool {
        matches!(
            self,
            Condition::InsufficientConfig1 | Condition::InsufficientConfig2 | Condition::InsufficientConfig3
        )
    }

    /// Inclusive tool-count bounds.
    pub fn size_bounds(self) -> (usize, usize) {
        match self {
            Condition::Baseline => (12, 12),
            Condition::RedundantRegular => (12, 15),
            Condition::RedundantMedium => (27, 34),
            Condition::RedundantHigh => (169, 169),
            Condition::InsufficientConfig1 => (14, 17),
            Condition::InsufficientConfig2 => (15, 17),
            Condition::InsufficientConfig3 => (18, 18),
            Condition::Differentiated => (17, 18),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown condition `{0}`")]
pub struct UnknownCondition(pub String);

impl FromStr for Condition {
    type Err = UnknownCondition;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Condition::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == key)
            .ok_or_else(|| UnknownCondition(s.trim().to_string()))
    }
}

/// Which kind of resource an unsolvable tool set withholds. The names are
/// the `<Ability>` values of a NoCall block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GapKind {
    CategoryMissing,
    SpecificToolMissing,
    InsufficientCapability,
}

impl GapKind {
    pub fn name(self) -> &'static str {
        match self {
            GapKind::CategoryMissing => "CategoryMissing",
            GapKind::SpecificToolMissing => "SpecificToolMissing",
            GapKind::InsufficientCapability => "InsufficientCapability",
        }
    }
}

impl FromStr for GapKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        [GapKind::CategoryMissing, GapKind::SpecificToolMissing, GapKind::InsufficientCapability]
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
            .ok_or_else(|| s.trim().to_string())
    }
}

/// What an Insufficient tool set is missing. `None` scope fields mean
/// Universal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthGap {
    pub category: ToolCategory,
    pub anatomy: Option<Anatomy>,
    pub modality: Option<Modality>,
    pub kind: GapKind,
    pub missing_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("condition {condition} cannot be built for task {task}: {reason}")]
    TaskConditionMismatch { condition: Condition, task: TaskType, reason: String },
    #[error("solvability search exceeded {0} expansions")]
    SearchBudgetExceeded(usize),
    #[error(transparent)]
    Tool(#[from] ToolError),
    #[error("tool set file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSet {
    pub condition: Condition,
    pub seed: u64,
    pub record_id: String,
    pub task: TaskType,
    pub tools: IndexMap<String, ToolCard>,
}

impl ToolSet {
    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ToolCard> {
        self.tools.get(name)
    }

    pub fn cards(&self) -> impl Iterator<Item = &ToolCard> {
        self.tools.values()
    }

    /// Concatenated text renderings, as shown to the agent.
    pub fn description(&self) -> String {
        self.tools.values().map(|c| c.render()).collect::<Vec<_>>().join("\n\n")
    }

    /// Append a card under the next free `TOOLn` name and return the name.
    pub fn push_card(&mut self, mut card: ToolCard) -> String {
        let name = format!("TOOL{}", self.tools.len() + 1);
        card.name = name.clone();
        self.tools.insert(name.clone(), card);
        name
    }

    pub fn to_json_map(&self) -> IndexMap<String, ToolCardJson> {
        self.tools.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_map()).expect("tool cards serialize")
    }

    /// Rebuild the card map from the JSON tool-set format.
    pub fn cards_from_json(text: &str) -> Result<IndexMap<String, ToolCard>, SimError> {
        let map: IndexMap<String, ToolCardJson> =
            serde_json::from_str(text).map_err(|e| SimError::Format(e.to_string()))?;
        let mut out = IndexMap::new();
        for (name, json) in map {
            out.insert(name, ToolCard::from_json(&json)?);
        }
        Ok(out)
    }
}

/// Capability label the record requires from a tool filling `slot`, if the
/// category carries labels.
pub fn need_label(category: ToolCategory, variant: Option<Variant>, record: &PatientRecord) -> Option<String> {
    match category {
        ToolCategory::OrganSegmentor => Some(record.organ_biomarker.object.clone()),
        ToolCategory::AnomalyDetector => Some(record.anomaly_biomarker.object.clone()),
        ToolCategory::ImagingDiagnoser | ToolCategory::GroundedDiagnoser => Some(record.disease.clone()),
        ToolCategory::BiomarkerQuantifier => match variant {
            Some(Variant::Organ) => Some(record.organ_biomarker.dim.name().to_string()),
            Some(Variant::Anomaly) => Some(record.anomaly_biomarker.dim.name().to_string()),
            None => None,
        },
        ToolCategory::IndicatorEvaluator => Some(record.indicator.name.clone()),
        _ => None,
    }
}

pub fn slot_need(slot: &ChainSlot, record: &PatientRecord) -> Option<String> {
    need_label(slot.category, slot.variant, record)
}

/// Whether `card` can be executed on `record` without misuse.
pub fn usable_on(card: &ToolCard, record: &PatientRecord) -> bool {
    let need = need_label(card.category, card.variant, record);
    card.applicability(record.anatomy, record.modality, need.as_deref()) == crate::tools::Applicability::Applicable
}

/// Deterministic generator keyed by the given parts.
pub fn keyed_rng(parts: &[&str]) -> ChaCha20Rng {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// 64-bit hash of the given parts, used for per-cell seeds.
pub fn keyed_u64(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
