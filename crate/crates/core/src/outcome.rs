//! Clone types and per-pair resolution outcomes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ratio::Ratio;

/// Resolved clone type, with Type III split into similarity bands.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CloneType {
    T1,
    T2,
    VST3,
    ST3,
    MT3,
    WT3_4,
    T4,
}

impl CloneType {
    /// Type III band for a syntactic similarity.
    pub fn type3_band(similarity: f64) -> CloneType {
        if similarity >= 0.9 {
            CloneType::VST3
        } else if similarity >= 0.7 {
            CloneType::ST3
        } else if similarity >= 0.5 {
            CloneType::MT3
        } else {
            CloneType::WT3_4
        }
    }

    pub fn type3_band_exact(similarity: Ratio) -> CloneType {
        if similarity.at_least(0.9) {
            CloneType::VST3
        } else if similarity.at_least(0.7) {
            CloneType::ST3
        } else if similarity.at_least(0.5) {
            CloneType::MT3
        } else {
            CloneType::WT3_4
        }
    }
}

impl fmt::Display for CloneType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloneType::T1 => "T1",
            CloneType::T2 => "T2",
            CloneType::VST3 => "VST3",
            CloneType::ST3 => "ST3",
            CloneType::MT3 => "MT3",
            CloneType::WT3_4 => "WT3_4",
            CloneType::T4 => "T4",
        })
    }
}

/// Coarse clone type as carried by seed files and judge votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelType {
    T1,
    T2,
    T3,
    T4,
}

impl fmt::Display for LabelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelType::T1 => "T1",
            LabelType::T2 => "T2",
            LabelType::T3 => "T3",
            LabelType::T4 => "T4",
        })
    }
}

impl FromStr for LabelType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "T1" => Ok(LabelType::T1),
            "T2" => Ok(LabelType::T2),
            "T3" => Ok(LabelType::T3),
            "T4" => Ok(LabelType::T4),
            other => Err(format!("unknown clone type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    KnownTrue,
    KnownFalse,
    AutoType1,
    AutoType2,
    AutoType3,
    Manual,
}

impl Status {
    pub fn is_automatic(self) -> bool {
        self != Status::Manual
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::KnownTrue => "known_true",
            Status::KnownFalse => "known_false",
            Status::AutoType1 => "auto_type1",
            Status::AutoType2 => "auto_type2",
            Status::AutoType3 => "auto_type3",
            Status::Manual => "manual",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    KnowledgeBase,
    Algorithm,
    Classifier,
    Human,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::KnowledgeBase => "knowledge_base",
            Provenance::Algorithm => "algorithm",
            Provenance::Classifier => "classifier",
            Provenance::Human => "human",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionOutcome {
    pub status: Status,
    pub clone_type: Option<CloneType>,
    pub provenance: Provenance,
    /// Why a pair fell through to manual judgment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ResolutionOutcome {
    pub fn auto(status: Status, clone_type: CloneType) -> Self {
        let provenance = match status {
            Status::AutoType3 => Provenance::Classifier,
            Status::KnownTrue | Status::KnownFalse => Provenance::KnowledgeBase,
            _ => Provenance::Algorithm,
        };
        Self {
            status,
            clone_type: Some(clone_type),
            provenance,
            reason: None,
        }
    }

    pub fn known(is_clone: bool, clone_type: Option<CloneType>) -> Self {
        Self {
            status: if is_clone {
                Status::KnownTrue
            } else {
                Status::KnownFalse
            },
            clone_type,
            provenance: Provenance::KnowledgeBase,
            reason: None,
        }
    }

    pub fn manual(reason: impl Into<String>) -> Self {
        Self {
            status: Status::Manual,
            clone_type: None,
            provenance: Provenance::Human,
            reason: Some(reason.into()),
        }
    }
}
