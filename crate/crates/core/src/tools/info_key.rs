use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Placeholder keys of the memory bank. Always serialized dollar-wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InfoKey {
    Image,
    Information,
    Anatomy,
    Modality,
    Disease,
    OrganObject,
    OrganDim,
    OrganQuant,
    AnomalyObject,
    AnomalyDim,
    AnomalyQuant,
    IndicatorName,
    IndicatorValue,
    Report,
    Treatment,
    OrganMask,
    AnomalyMask,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown information key `{0}`")]
pub struct UnknownKey(pub String);

impl InfoKey {
    pub const ALL: [InfoKey; 17] = [
        InfoKey::Image,
        InfoKey::Information,
        InfoKey::Anatomy,
        InfoKey::Modality,
        InfoKey::Disease,
        InfoKey::OrganObject,
        InfoKey::OrganDim,
        InfoKey::OrganQuant,
        InfoKey::AnomalyObject,
        InfoKey::AnomalyDim,
        InfoKey::AnomalyQuant,
        InfoKey::IndicatorName,
        InfoKey::IndicatorValue,
        InfoKey::Report,
        InfoKey::Treatment,
        InfoKey::OrganMask,
        InfoKey::AnomalyMask,
    ];

    pub fn bare(self) -> &'static str {
        match self {
            InfoKey::Image => "Image",
            InfoKey::Information => "Information",
            InfoKey::Anatomy => "Anatomy",
            InfoKey::Modality => "Modality",
            InfoKey::Disease => "Disease",
            InfoKey::OrganObject => "OrganObject",
            InfoKey::OrganDim => "OrganDim",
            InfoKey::OrganQuant => "OrganQuant",
            InfoKey::AnomalyObject => "AnomalyObject",
            InfoKey::AnomalyDim => "AnomalyDim",
            InfoKey::AnomalyQuant => "AnomalyQuant",
            InfoKey::IndicatorName => "IndicatorName",
            InfoKey::IndicatorValue => "IndicatorValue",
            InfoKey::Report => "Report",
            InfoKey::Treatment => "Treatment",
            InfoKey::OrganMask => "OrganMask",
            InfoKey::AnomalyMask => "AnomalyMask",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InfoKey::Image => "$Image$",
            InfoKey::Information => "$Information$",
            InfoKey::Anatomy => "$Anatomy$",
            InfoKey::Modality => "$Modality$",
            InfoKey::Disease => "$Disease$",
            InfoKey::OrganObject => "$OrganObject$",
            InfoKey::OrganDim => "$OrganDim$",
            InfoKey::OrganQuant => "$OrganQuant$",
            InfoKey::AnomalyObject => "$AnomalyObject$",
            InfoKey::AnomalyDim => "$AnomalyDim$",
            InfoKey::AnomalyQuant => "$AnomalyQuant$",
            InfoKey::IndicatorName => "$IndicatorName$",
            InfoKey::IndicatorValue => "$IndicatorValue$",
            InfoKey::Report => "$Report$",
            InfoKey::Treatment => "$Treatment$",
            InfoKey::OrganMask => "$OrganMask$",
            InfoKey::AnomalyMask => "$AnomalyMask$",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bit(self) -> u32 {
        1 << self.index()
    }

    /// Keys whose bank value is a placeholder rather than record text.
    pub fn is_placeholder(self) -> bool {
        matches!(self, InfoKey::Image | InfoKey::OrganMask | InfoKey::AnomalyMask)
    }
}

impl fmt::Display for InfoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfoKey {
    type Err = UnknownKey;

    /// Accepts `$Key$`, bare `Key`, and the legacy `$ValueName$` spelling.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_matches(|c| c == '\'' || c == '"' || c == '`').trim();
        let bare = t.strip_prefix('$').and_then(|r| r.strip_suffix('$')).unwrap_or(t);
        if bare == "ValueName" {
            return Ok(InfoKey::IndicatorValue);
        }
        InfoKey::ALL
            .into_iter()
            .find(|k| k.bare() == bare)
            .ok_or_else(|| UnknownKey(s.trim().to_string()))
    }
}

impl Serialize for InfoKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for InfoKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Render a key list in Python list syntax: `['$Image$', '$Anatomy$']`.
pub fn render_key_list(keys: &[InfoKey]) -> String {
    let inner: Vec<String> = keys.iter().map(|k| format!("'{}'", k.as_str())).collect();
    format!("[{}]", inner.join(", "))
}

/// Every dollar-wrapped key token in `text`, in order of appearance.
pub fn scan_keys(text: &str) -> Result<Vec<InfoKey>, UnknownKey> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('$') {
        let after = &rest[start + 1..];
        let Some(end) = after.find('$') else { break };
        let token = &after[..end];
        if !token.is_empty() && token.chars().all(|c| c.is_ascii_alphanumeric()) {
            out.push(token.parse()?);
            rest = &after[end + 1..];
        } else {
            rest = after;
        }
    }
    Ok(out)
}
