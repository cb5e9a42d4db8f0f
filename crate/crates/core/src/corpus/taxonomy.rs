//! Anatomy / modality taxonomy and the 22 allowed imaging combinations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Anatomy {
    #[serde(rename = "Head and Neck")]
    HeadAndNeck,
    Chest,
    Breast,
    #[serde(rename = "Abdomen and Pelvis")]
    AbdomenAndPelvis,
    Limb,
    Spine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "X-ray")]
    XRay,
    #[serde(rename = "CT")]
    Ct,
    #[serde(rename = "MRI")]
    Mri,
    Ultrasound,
    Mammography,
}

impl Anatomy {
    pub const ALL: [Anatomy; 6] = [
        Anatomy::HeadAndNeck,
        Anatomy::Chest,
        Anatomy::Breast,
        Anatomy::AbdomenAndPelvis,
        Anatomy::Limb,
        Anatomy::Spine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Anatomy::HeadAndNeck => "Head and Neck",
            Anatomy::Chest => "Chest",
            Anatomy::Breast => "Breast",
            Anatomy::AbdomenAndPelvis => "Abdomen and Pelvis",
            Anatomy::Limb => "Limb",
            Anatomy::Spine => "Spine",
        }
    }

    /// Modalities this region is imaged with in the corpus.
    pub fn modalities(self) -> &'static [Modality] {
        use Modality::*;
        match self {
            Anatomy::Spine => &[XRay, Ct, Mri],
            Anatomy::Breast => &[Mammography, Mri, Ultrasound],
            _ => &[XRay, Ct, Mri, Ultrasound],
        }
    }
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::XRay,
        Modality::Ct,
        Modality::Mri,
        Modality::Ultrasound,
        Modality::Mammography,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modality::XRay => "X-ray",
            Modality::Ct => "CT",
            Modality::Mri => "MRI",
            Modality::Ultrasound => "Ultrasound",
            Modality::Mammography => "Mammography",
        }
    }
}

impl fmt::Display for Anatomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized {kind} `{value}`")]
pub struct UnknownTerm {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for Anatomy {
    type Err = UnknownTerm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = squash(s);
        let found = match key.as_str() {
            "headandneck" | "headneck" | "hn" => Some(Anatomy::HeadAndNeck),
            "chest" => Some(Anatomy::Chest),
            "breast" => Some(Anatomy::Breast),
            "abdomenandpelvis" | "abdomenpelvis" | "abdomen" => Some(Anatomy::AbdomenAndPelvis),
            "limb" => Some(Anatomy::Limb),
            "spine" => Some(Anatomy::Spine),
            _ => None,
        };
        found.ok_or_else(|| UnknownTerm { kind: "anatomy", value: s.trim().to_string() })
    }
}

impl FromStr for Modality {
    type Err = UnknownTerm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = squash(s);
        let found = match key.as_str() {
            "xray" | "radiograph" => Some(Modality::XRay),
            "ct" => Some(Modality::Ct),
            "mri" | "mr" => Some(Modality::Mri),
            "ultrasound" | "us" => Some(Modality::Ultrasound),
            "mammography" | "mammogram" => Some(Modality::Mammography),
            _ => None,
        };
        found.ok_or_else(|| UnknownTerm { kind: "modality", value: s.trim().to_string() })
    }
}

pub fn is_allowed_combination(anatomy: Anatomy, modality: Modality) -> bool {
    anatomy.modalities().contains(&modality)
}

/// All 22 (anatomy, modality) pairs in canonical order.
pub fn combinations() -> Vec<(Anatomy, Modality)> {
    Anatomy::ALL
        .iter()
        .flat_map(|&a| a.modalities().iter().map(move |&m| (a, m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_two_combinations() {
        assert_eq!(combinations().len(), 22);
        assert!(!is_allowed_combination(Anatomy::Breast, Modality::XRay));
        assert!(!is_allowed_combination(Anatomy::Spine, Modality::Ultrasound));
        assert!(is_allowed_combination(Anatomy::Breast, Modality::Mammography));
    }

    #[test]
    fn names_round_trip() {
        for a in Anatomy::ALL {
            assert_eq!(a.name().parse::<Anatomy>().unwrap(), a);
        }
        for m in Modality::ALL {
            assert_eq!(m.name().parse::<Modality>().unwrap(), m);
        }
        assert_eq!("x-ray".parse::<Modality>().unwrap(), Modality::XRay);
        assert!("Brain".parse::<Anatomy>().is_err());
    }
}
