use std::sync::LazyLock;

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{keyed_rng, need_label, Condition, GapKind, GroundTruthGap, SimError, ToolSet};
use crate::corpus::{combinations, ground_truth_spec, Anatomy, BiomarkerDim, ChainSlot, Modality, PatientRecord, TaskType};
use crate::tools::{LabelKind, Scope, ToolCard, ToolCategory, Variant};

/// Categories that may receive scope-mismatched extra tools.
const EXTRA_CATEGORIES: [ToolCategory; 8] = [
    ToolCategory::OrganSegmentor,
    ToolCategory::AnomalyDetector,
    ToolCategory::ImagingDiagnoser,
    ToolCategory::GroundedDiagnoser,
    ToolCategory::BiomarkerQuantifier,
    ToolCategory::IndicatorEvaluator,
    ToolCategory::ReportGenerator,
    ToolCategory::TreatmentPlanner,
];

/// Default `(lower, upper)` performance by category and scope.
fn default_performance(category: ToolCategory, specific: bool) -> (f64, f64) {
    use ToolCategory::*;
    match (category, specific) {
        (AnatomyClassifier | ModalityClassifier, _) => (0.95, 0.95),
        (OrganSegmentor, true) => (0.85, 0.85),
        (OrganSegmentor, false) => (0.8, 0.8),
        (AnomalyDetector, true) => (0.8, 0.8),
        (AnomalyDetector, false) => (0.75, 0.75),
        (ImagingDiagnoser, true) => (0.75, 0.8),
        (ImagingDiagnoser, false) => (0.7, 0.75),
        (GroundedDiagnoser, _) => (0.7, 0.85),
        (BiomarkerQuantifier, _) => (0.75, 0.8),
        (IndicatorEvaluator, _) => (0.7, 0.8),
        (ReportGenerator, _) => (0.4, 0.88),
        (TreatmentPlanner, _) => (0.6, 0.87),
    }
}

fn card(category: ToolCategory, variant: Option<Variant>, scope: Scope, with_optional: bool) -> ToolCard {
    let (lo, hi) = default_performance(category, scope.is_specific());
    ToolCard::build("", category, variant, scope, with_optional, lo, hi)
}

/// Label vocabulary used when restricting a tool's capability.
pub fn label_pool(kind: LabelKind) -> Vec<&'static str> {
    match kind {
        LabelKind::Organs => vec![
            "liver", "spleen", "kidney", "pancreas", "heart", "brain", "thyroid", "femur", "bladder", "prostate",
            "uterus", "gallbladder",
        ],
        LabelKind::Anomalies => vec![
            "nodule", "cyst", "effusion", "calcification", "hemorrhage", "edema", "stenosis", "abscess", "polyp",
            "aneurysm",
        ],
        LabelKind::Diseases => vec![
            "pneumothorax", "atelectasis", "lung cancer", "tuberculosis", "osteoarthritis", "hepatic steatosis",
            "renal calculus", "glioma", "cholecystitis", "scoliosis",
        ],
        LabelKind::Biomarkers => BiomarkerDim::ALL.iter().map(|d| d.name()).collect(),
        LabelKind::Indicators => vec![
            "TNM Stage", "Glasgow Coma Scale", "Wells Score", "Bosniak Classification", "Garden Classification",
            "Gleason Score", "Child-Pugh Score", "Cobb Angle",
        ],
    }
}

struct Builder<'a> {
    record: &'a PatientRecord,
    rng: ChaCha20Rng,
    tools: Vec<ToolCard>,
}

impl<'a> Builder<'a> {
    fn record_scope(&self) -> Scope {
        Scope::specific(self.record.anatomy, self.record.modality)
    }

    /// The twelve-tool minimal set: AC, MC, one each of OS/AD/ID/GD/RG/TP
    /// (universal or record-specific at random) and organ/anomaly BQ and IE.
    fn baseline(&mut self) {
        use ToolCategory::*;
        self.tools.push(card(AnatomyClassifier, None, Scope::UNIVERSAL, true));
        self.tools.push(card(ModalityClassifier, None, Scope::UNIVERSAL, true));
        for c in [OrganSegmentor, AnomalyDetector, ImagingDiagnoser, GroundedDiagnoser, ReportGenerator, TreatmentPlanner] {
            let scope = if self.rng.random_bool(0.5) { self.record_scope() } else { Scope::UNIVERSAL };
            self.tools.push(card(c, None, scope, true));
        }
        for c in [BiomarkerQuantifier, IndicatorEvaluator] {
            for v in Variant::ALL {
                self.tools.push(card(c, Some(v), Scope::UNIVERSAL, true));
            }
        }
    }

    fn mismatched_scope(&mut self) -> Scope {
        let own = (self.record.anatomy, self.record.modality);
        let others: Vec<(Anatomy, Modality)> = combinations().into_iter().filter(|c| *c != own).collect();
        let (a, m) = *others.choose(&mut self.rng).expect("21 other combinations");
        Scope::specific(a, m)
    }

    /// A tool of `category` scoped to some other anatomy-modality pair.
    fn mismatched(&mut self, category: ToolCategory, variant: Option<Variant>) -> ToolCard {
        let scope = self.mismatched_scope();
        let variant = match (category.has_variants(), variant) {
            (false, _) => None,
            (true, Some(v)) => Some(v),
            (true, None) => Some(*Variant::ALL.choose(&mut self.rng).expect("two variants")),
        };
        let with_optional = self.rng.random_bool(0.5);
        card(category, variant, scope, with_optional)
    }

    fn pad_with_extras(&mut self, target: usize, exclude: Option<ToolCategory>) {
        let pool: Vec<ToolCategory> = EXTRA_CATEGORIES.into_iter().filter(|c| Some(*c) != exclude).collect();
        while self.tools.len() < target {
            let c = *pool.choose(&mut self.rng).expect("non-empty pool");
            let t = self.mismatched(c, None);
            self.tools.push(t);
        }
    }

    fn remove_serving(&mut self, slot: &ChainSlot) -> usize {
        let before = self.tools.len();
        self.tools.retain(|t| !t.serves(slot.category, slot.variant));
        before - self.tools.len()
    }

    fn finish(mut self, condition: Condition, seed: u64, task: TaskType, shuffle: bool) -> ToolSet {
        if shuffle {
            self.tools.shuffle(&mut self.rng);
        }
        self.tools.sort_by_key(|t| t.category);
        let mut map = IndexMap::new();
        for (i, mut t) in self.tools.into_iter().enumerate() {
            t.name = format!("TOOL{}", i + 1);
            map.insert(t.name.clone(), t);
        }
        ToolSet { condition, seed, record_id: self.record.record_id.clone(), task, tools: map }
    }
}

/// First chain slot (in chain order) whose category is `category`.
fn first_slot(task: TaskType, category: ToolCategory) -> ChainSlot {
    ground_truth_spec(task)
        .gt_chain
        .iter()
        .flat_map(|s| s.slots.iter().copied())
        .find(|s| s.category == category)
        .expect("category drawn from the chain")
}

fn chain_categories(task: TaskType, allowed: &[ToolCategory]) -> Vec<ToolCategory> {
    let mut out = Vec::new();
    for c in ground_truth_spec(task).categories() {
        if allowed.contains(&c) && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// `high_manifest` named and ordered; identical for every cell.
static HIGH_SET: LazyLock<IndexMap<String, ToolCard>> = LazyLock::new(|| {
    let mut tools = high_manifest();
    tools.sort_by_key(|t| t.category);
    tools
        .into_iter()
        .enumerate()
        .map(|(i, mut t)| {
            t.name = format!("TOOL{}", i + 1);
            (t.name.clone(), t)
        })
        .collect()
});

/// The fixed comprehensive set: universal AC/MC, one OS/AD/ID/GD/RG/TP per
/// anatomy-modality pair, universal BQ/IE organ/anomaly with and without
/// optional inputs, universal OS/AD/ID/GD/RG/TP with and without optional
/// inputs, and modality-only OS/AD/ID for each modality. 169 cards.
pub fn high_manifest() -> Vec<ToolCard> {
    use ToolCategory::*;
    let mut tools = vec![
        card(AnatomyClassifier, None, Scope::UNIVERSAL, true),
        card(ModalityClassifier, None, Scope::UNIVERSAL, true),
    ];
    let per_combo = [OrganSegmentor, AnomalyDetector, ImagingDiagnoser, GroundedDiagnoser, ReportGenerator, TreatmentPlanner];
    for c in per_combo {
        for (a, m) in combinations() {
            tools.push(card(c, None, Scope::specific(a, m), true));
        }
    }
    for c in [BiomarkerQuantifier, IndicatorEvaluator] {
        for v in Variant::ALL {
            for with_optional in [true, false] {
                tools.push(card(c, Some(v), Scope::UNIVERSAL, with_optional));
            }
        }
    }
    for c in per_combo {
        for with_optional in [true, false] {
            tools.push(card(c, None, Scope::UNIVERSAL, with_optional));
        }
    }
    for c in [OrganSegmentor, AnomalyDetector, ImagingDiagnoser] {
        for m in Modality::ALL {
            tools.push(card(c, None, Scope { anatomy: None, modality: Some(m) }, true));
        }
    }
    tools
}

/// Generate the tool set for one (condition, seed, record, task) cell. For
/// Insufficient conditions the withheld resource is returned as a gap.
pub fn build_toolset(
    condition: Condition,
    seed: u64,
    record: &PatientRecord,
    task: TaskType,
) -> Result<(ToolSet, Option<GroundTruthGap>), SimError> {
    let seed_text = seed.to_string();
    let task_text = task.to_string();
    let rng = keyed_rng(&["toolset", condition.name(), &seed_text, &record.record_id, &task_text]);
    let mut b = Builder { record, rng, tools: Vec::new() };
    let mismatch = |reason: &str| SimError::TaskConditionMismatch { condition, task, reason: reason.into() };
    use ToolCategory::*;

    let mut gap = None;
    match condition {
        Condition::Baseline => b.baseline(),
        Condition::RedundantRegular => {
            b.baseline();
            let n = b.rng.random_range(0..=3usize);
            let mut cats = EXTRA_CATEGORIES.to_vec();
            cats.shuffle(&mut b.rng);
            for c in cats.into_iter().take(n) {
                let t = b.mismatched(c, None);
                b.tools.push(t);
            }
        }
        Condition::RedundantMedium => {
            b.baseline();
            let extras = b.rng.random_range(15..=22usize);
            let groups = extras.div_ceil(3);
            let mut cats = EXTRA_CATEGORIES.to_vec();
            cats.shuffle(&mut b.rng);
            // Every chosen category gets 2 extras, then the remainder tops
            // some of them up to 3.
            let mut counts = vec![2usize; groups];
            for c in counts.iter_mut().take(extras - 2 * groups) {
                *c = 3;
            }
            for (c, n) in cats.into_iter().zip(counts) {
                for _ in 0..n {
                    let t = b.mismatched(c, None);
                    b.tools.push(t);
                }
            }
        }
        Condition::RedundantHigh => {
            let tools = HIGH_SET.clone();
            return Ok((ToolSet { condition, seed, record_id: record.record_id.clone(), task, tools }, None));
        }
        Condition::InsufficientConfig1 => {
            b.baseline();
            let cats = chain_categories(task, &EXTRA_CATEGORIES);
            let x = *cats.choose(&mut b.rng).ok_or_else(|| mismatch("no removable category in the chain"))?;
            b.tools.retain(|t| t.category != x);
            let target = b.rng.random_range(14..=17usize);
            b.pad_with_extras(target, Some(x));
            gap = Some(GroundTruthGap { category: x, anatomy: None, modality: None, kind: GapKind::CategoryMissing, missing_label: None });
        }
        Condition::InsufficientConfig2 => {
            b.baseline();
            let cats = chain_categories(task, &EXTRA_CATEGORIES);
            let x = *cats.choose(&mut b.rng).ok_or_else(|| mismatch("no replaceable category in the chain"))?;
            let slot = first_slot(task, x);
            b.remove_serving(&slot);
            let k = b.rng.random_range(1..=3usize);
            for _ in 0..k {
                let t = b.mismatched(x, slot.variant);
                b.tools.push(t);
            }
            let target = b.rng.random_range(15..=17usize);
            b.pad_with_extras(target, Some(x));
            gap = Some(GroundTruthGap {
                category: x,
                anatomy: Some(record.anatomy),
                modality: Some(record.modality),
                kind: GapKind::SpecificToolMissing,
                missing_label: None,
            });
        }
        Condition::InsufficientConfig3 => {
            b.baseline();
            let allowed = [OrganSegmentor, AnomalyDetector, ImagingDiagnoser, GroundedDiagnoser, BiomarkerQuantifier, IndicatorEvaluator];
            let cats = chain_categories(task, &allowed);
            let x = *cats.choose(&mut b.rng).ok_or_else(|| mismatch("no label-bearing category in the chain"))?;
            let slot = first_slot(task, x);
            let need = need_label(slot.category, slot.variant, record).ok_or_else(|| mismatch("slot has no label"))?;
            let kind = LabelKind::for_category(x).expect("label-bearing category");
            let pool: Vec<&str> = label_pool(kind).into_iter().filter(|l| !l.eq_ignore_ascii_case(&need)).collect();
            for i in 0..b.tools.len() {
                if b.tools[i].serves(slot.category, slot.variant) {
                    let n = b.rng.random_range(2..=3usize);
                    let labels: Vec<String> = pool.choose_multiple(&mut b.rng, n).map(|s| s.to_string()).collect();
                    b.tools[i].capability_labels = labels;
                }
            }
            b.pad_with_extras(18, None);
            gap = Some(GroundTruthGap {
                category: x,
                anatomy: Some(record.anatomy),
                modality: Some(record.modality),
                kind: GapKind::InsufficientCapability,
                missing_label: Some(need),
            });
        }
        Condition::Differentiated => {
            b.baseline();
            let allowed = [OrganSegmentor, AnomalyDetector, ImagingDiagnoser, GroundedDiagnoser, ReportGenerator, TreatmentPlanner];
            let cats = chain_categories(task, &allowed);
            let x = *cats.choose(&mut b.rng).ok_or_else(|| mismatch("no differentiable category in the chain"))?;
            b.tools.retain(|t| t.category != x);
            let specific = b.record_scope();
            let modality_only = Scope { anatomy: None, modality: Some(record.modality) };
            b.tools.push(ToolCard::build("", x, None, Scope::UNIVERSAL, false, 0.5, 0.5));
            b.tools.push(ToolCard::build("", x, None, modality_only, false, 0.6, 0.6));
            b.tools.push(ToolCard::build("", x, None, specific, false, 0.7, 0.7));
            let top = match (LabelKind::for_category(x), need_label(x, None, record)) {
                (Some(kind), Some(need)) => {
                    let mut labels: Vec<String> = label_pool(kind)
                        .into_iter()
                        .filter(|l| !l.eq_ignore_ascii_case(&need))
                        .collect::<Vec<_>>()
                        .choose_multiple(&mut b.rng, 2)
                        .map(|s| s.to_string())
                        .collect();
                    labels.insert(b.rng.random_range(0..=labels.len()), need);
                    ToolCard::build("", x, None, specific, false, 0.8, 0.8).with_labels(labels)
                }
                _ => ToolCard::build("", x, None, specific, true, 0.7, 0.8),
            };
            b.tools.push(top);
            let target = b.rng.random_range(17..=18usize);
            b.pad_with_extras(target, Some(x));
        }
    }
    let set = b.finish(condition, seed, task, true);
    debug_assert!({
        let (lo, hi) = condition.size_bounds();
        (lo..=hi).contains(&set.len())
    });
    Ok((set, gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bundled_corpus;

    fn sinusitis() -> PatientRecord {
        bundled_corpus().get("head-and-neck__x-ray__sinusitis").unwrap().record.clone()
    }

    fn t(n: u8) -> TaskType {
        TaskType::new(n).unwrap()
    }

    #[test]
    fn baseline_twelve_tools_ten_categories() {
        let (set, gap) = build_toolset(Condition::Baseline, 1, &sinusitis(), t(3)).unwrap();
        assert_eq!(set.len(), 12);
        assert!(gap.is_none());
        let mut cats: Vec<_> = set.cards().map(|c| c.category).collect();
        cats.dedup();
        assert_eq!(cats, ToolCategory::ALL);
        let names: Vec<&str> = set.tools.keys().map(|k| k.as_str()).collect();
        assert_eq!(names[0], "TOOL1");
        assert_eq!(names[11], "TOOL12");
    }

    #[test]
    fn high_is_fixed_at_169() {
        assert_eq!(high_manifest().len(), 169);
        let r = sinusitis();
        let (a, _) = build_toolset(Condition::RedundantHigh, 1, &r, t(1)).unwrap();
        let (b, _) = build_toolset(Condition::RedundantHigh, 99, &r, t(11)).unwrap();
        assert_eq!(a.len(), 169);
        assert_eq!(a.tools, b.tools);
    }

    #[test]
    fn config3_has_capability_gap() {
        let (set, gap) = build_toolset(Condition::InsufficientConfig3, 5, &sinusitis(), t(7)).unwrap();
        assert_eq!(set.len(), 18);
        assert_eq!(gap.unwrap().kind, GapKind::InsufficientCapability);
    }

    #[test]
    fn same_key_same_set() {
        let r = sinusitis();
        for c in Condition::ALL {
            let a = build_toolset(c, 42, &r, t(10)).unwrap();
            let b = build_toolset(c, 42, &r, t(10)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn differentiated_ladder_is_strict() {
        let r = sinusitis();
        for seed in 0..50 {
            let (set, _) = build_toolset(Condition::Differentiated, seed, &r, t(5)).unwrap();
            let mut best: Vec<(ToolCategory, Vec<f64>)> = Vec::new();
            for c in ToolCategory::ALL {
                let mut uppers: Vec<f64> = set
                    .cards()
                    .filter(|k| k.category == c && super::super::usable_on(k, &r))
                    .map(|k| k.performance.upper)
                    .collect();
                uppers.sort_by(f64::total_cmp);
                best.push((c, uppers));
            }
            assert!(best.iter().any(|(_, u)| u == &[0.5, 0.6, 0.7, 0.8]), "seed {seed}");
        }
    }

    proptest::proptest! {
        #[test]
        fn sizes_stay_in_bounds(seed in 0u64..10_000, task in 1u8..=11, c in 0usize..8, r in 0usize..6) {
            let corpus = bundled_corpus();
            let record = &corpus.entries[r].record;
            let condition = Condition::ALL[c];
            let (set, gap) = build_toolset(condition, seed, record, t(task)).unwrap();
            let (lo, hi) = condition.size_bounds();
            proptest::prop_assert!((lo..=hi).contains(&set.len()), "{} tools", set.len());
            proptest::prop_assert_eq!(gap.is_some(), condition.is_insufficient());
            for card in set.cards() {
                proptest::prop_assert!(card.validate().is_ok(), "{:?}", card.validate());
            }
        }
    }
}
