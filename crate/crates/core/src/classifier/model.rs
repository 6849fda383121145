//! Model files: a JSON document with a self-describing header and the
//! parameter arrays.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Classifier, ClassifierError, FeatureVector, FEATURE_COUNT};
use crate::metrics::DICTIONARY_VERSION;

pub const MODEL_FORMAT: &str = "clonejudge-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Feedforward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub std: f64,
}

/// Held-out split scores at the stored cutoff. Precision is absent when the
/// model predicted no positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOut {
    pub rows: usize,
    pub cutoff: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format: String,
    pub kind: ModelKind,
    pub metric_dictionary_version: String,
    pub seed: u64,
    pub scaling: Vec<Scaling>,
    pub training_rows: usize,
    pub training_fingerprint: String,
    pub held_out: HeldOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic {
        weights: Vec<f64>,
        bias: f64,
    },
    Feedforward {
        /// `hidden` rows of `FEATURE_COUNT` weights.
        w1: Vec<Vec<f64>>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub header: ModelHeader,
    pub params: ModelParams,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ClassifierModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("model serializes");
        v.push(b'\n');
        v
    }

    /// Parses a model file, refusing one built for another metric dictionary.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifierError> {
        let m: ClassifierModel =
            serde_json::from_slice(bytes).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if m.header.format != MODEL_FORMAT {
            return Err(ClassifierError::Format(format!(
                "unknown format `{}`",
                m.header.format
            )));
        }
        if m.header.metric_dictionary_version != DICTIONARY_VERSION {
            return Err(ClassifierError::VersionMismatch {
                expected: DICTIONARY_VERSION.into(),
                found: m.header.metric_dictionary_version,
            });
        }
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::Format(m.into()));
        if self.header.scaling.len() != FEATURE_COUNT {
            return bad("scaling must have one entry per feature");
        }
        match &self.params {
            ModelParams::Logistic { weights, .. } if weights.len() != FEATURE_COUNT => {
                bad("weight count")
            }
            ModelParams::Feedforward { w1, b1, w2, .. }
                if w1.len() != b1.len()
                    || w1.len() != w2.len()
                    || w1.iter().any(|r| r.len() != FEATURE_COUNT) =>
            {
                bad("layer shapes")
            }
            _ => Ok(()),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// SHA-256 of the serialized model.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub(crate) fn scale(scaling: &[Scaling], x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(scaling)
            .map(|(v, s)| (v - s.mean) / s.std)
            .collect()
    }

    pub(crate) fn score_scaled(params: &ModelParams, x: &[f64]) -> f64 {
        match params {
            ModelParams::Logistic { weights, bias } => {
                sigmoid(weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias)
            }
            ModelParams::Feedforward { w1, b1, w2, b2 } => {
                let z: f64 = w1
                    .iter()
                    .zip(b1)
                    .zip(w2)
                    .map(|((row, b), w)| {
                        let a = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
                        w * a.tanh()
                    })
                    .sum();
                sigmoid(z + b2)
            }
        }
    }
}

impl Classifier for ClassifierModel {
    fn predict(&self, fv: &FeatureVector) -> Result<f64, ClassifierError> {
        if fv.values().iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::Format("non-finite feature".into()));
        }
        let x = Self::scale(&self.header.scaling, fv.values());
        Ok(Self::score_scaled(&self.params, &x).clamp(0.0, 1.0))
    }
}
