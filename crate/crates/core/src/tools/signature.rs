use super::card::Scope;
use super::category::{ToolCategory, Variant};
use super::info_key::InfoKey;

/// Default input/output lists for a category at a given scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySignature {
    pub compulsory: Vec<InfoKey>,
    pub optional: Vec<InfoKey>,
    pub output: Vec<InfoKey>,
}

/// Optional inputs of a report generator.
pub const REPORT_OPTIONAL: [InfoKey; 12] = [
    InfoKey::Information,
    InfoKey::OrganObject,
    InfoKey::AnomalyObject,
    InfoKey::Disease,
    InfoKey::OrganDim,
    InfoKey::OrganQuant,
    InfoKey::AnomalyDim,
    InfoKey::AnomalyQuant,
    InfoKey::IndicatorName,
    InfoKey::IndicatorValue,
    InfoKey::OrganMask,
    InfoKey::AnomalyMask,
];

const TREATMENT_OPTIONAL: [InfoKey; 9] = [
    InfoKey::OrganMask,
    InfoKey::AnomalyMask,
    InfoKey::OrganObject,
    InfoKey::AnomalyObject,
    InfoKey::OrganQuant,
    InfoKey::AnomalyQuant,
    InfoKey::IndicatorName,
    InfoKey::IndicatorValue,
    InfoKey::Report,
];

/// Signature table. Image-analysis tools that are not tied to one
/// anatomy-modality pair need `$Anatomy$` and `$Modality$` as inputs.
/// `variant` only matters for the biomarker and indicator categories; `None`
/// there yields a generic tool serving both flavours.
pub fn category_signature(category: ToolCategory, scope: Scope, variant: Option<Variant>) -> CategorySignature {
    use InfoKey::*;
    let located = if scope.is_specific() { vec![Image] } else { vec![Image, Anatomy, Modality] };
    let (compulsory, optional, output) = match category {
        ToolCategory::AnatomyClassifier => (vec![Image], vec![], vec![Anatomy]),
        ToolCategory::ModalityClassifier => (vec![Image], vec![], vec![Modality]),
        ToolCategory::OrganSegmentor => (located, vec![], vec![OrganMask, OrganObject]),
        ToolCategory::AnomalyDetector => (located, vec![], vec![AnomalyMask, AnomalyObject]),
        ToolCategory::ImagingDiagnoser => (located, vec![Information], vec![Disease]),
        ToolCategory::GroundedDiagnoser => (
            vec![Image, OrganMask, OrganObject, AnomalyMask, AnomalyObject],
            vec![Information, Anatomy, Modality],
            vec![Disease],
        ),
        ToolCategory::BiomarkerQuantifier => match variant {
            Some(Variant::Organ) => (vec![Image, OrganObject, OrganMask], vec![Anatomy, Modality], vec![OrganDim, OrganQuant]),
            Some(Variant::Anomaly) => {
                (vec![Image, AnomalyObject, AnomalyMask], vec![Anatomy, Modality], vec![AnomalyDim, AnomalyQuant])
            }
            None => (vec![Image], vec![], vec![OrganDim, OrganQuant, AnomalyDim, AnomalyQuant]),
        },
        ToolCategory::IndicatorEvaluator => match variant {
            Some(Variant::Organ) => {
                (vec![Information, OrganObject, OrganQuant], vec![Anatomy, Modality], vec![IndicatorName, IndicatorValue])
            }
            Some(Variant::Anomaly) => (
                vec![Information, AnomalyObject, AnomalyQuant],
                vec![Anatomy, Modality],
                vec![IndicatorName, IndicatorValue],
            ),
            None => (vec![Information], vec![], vec![IndicatorName, IndicatorValue]),
        },
        ToolCategory::ReportGenerator => (located, REPORT_OPTIONAL.to_vec(), vec![Report]),
        ToolCategory::TreatmentPlanner => (
            vec![Image, Information, Modality, Anatomy, Disease],
            TREATMENT_OPTIONAL.to_vec(),
            vec![Treatment],
        ),
    };
    CategorySignature { compulsory, optional, output }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Anatomy, Modality};

    fn disjoint(sig: &CategorySignature) -> bool {
        let all = [&sig.compulsory, &sig.optional, &sig.output];
        for (i, a) in all.iter().enumerate() {
            for b in all.iter().skip(i + 1) {
                if a.iter().any(|k| b.contains(k)) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn table_rows() {
        use InfoKey::{Disease, Image, Information, OrganMask, OrganObject};
        let (anatomy, modality) = (InfoKey::Anatomy, InfoKey::Modality);
        let os = category_signature(ToolCategory::OrganSegmentor, Scope::UNIVERSAL, None);
        assert_eq!(os.compulsory, [Image, anatomy, modality]);
        assert_eq!(os.output, [OrganMask, OrganObject]);
        let mc = category_signature(ToolCategory::ModalityClassifier, Scope::UNIVERSAL, None);
        assert_eq!((mc.compulsory.as_slice(), mc.output.as_slice()), ([Image].as_slice(), [modality].as_slice()));
        let tp = category_signature(ToolCategory::TreatmentPlanner, Scope::UNIVERSAL, None);
        for k in [Image, Information, modality, anatomy, Disease] {
            assert!(tp.compulsory.contains(&k));
        }
        let specific = Scope::specific(Anatomy::Spine, Modality::Ct);
        assert_eq!(category_signature(ToolCategory::OrganSegmentor, specific, None).compulsory, [Image]);
    }

    #[test]
    fn lists_are_disjoint() {
        let scopes = [Scope::UNIVERSAL, Scope::specific(Anatomy::Chest, Modality::XRay)];
        for c in ToolCategory::ALL {
            for s in scopes {
                for v in [None, Some(Variant::Organ), Some(Variant::Anomaly)] {
                    assert!(disjoint(&category_signature(c, s, v)), "{c:?} {s:?} {v:?}");
                }
            }
        }
    }
}
