//! Type III classifier: pair features, training-set curation, reference
//! models and their file format.

mod curate;
mod dataset;
mod model;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::key::Endpoint;
use crate::metrics::{MetricsVector, METRIC_COUNT, METRIC_NAMES};

pub use curate::{curate_training_set, Curated, CurationInput, CurationStats};
pub use dataset::{RowProvenance, TrainingRow, TrainingSet};
pub use model::{
    ClassifierModel, HeldOut, ModelHeader, ModelKind, ModelParams, Scaling, MODEL_FORMAT,
};
pub use train::{train, Hyperparams};

pub const FEATURE_COUNT: usize = 2 * METRIC_COUNT;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("model built for metric dictionary {found}, this build uses {expected}")]
    VersionMismatch { expected: String, found: String },
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("training did not converge: {0}")]
    NonConvergence(String),
    #[error("tool intersection is empty; curation needs at least two overlapping tool outputs")]
    EmptyIntersection,
    #[error("invalid model file: {0}")]
    Format(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Metrics of the two methods, the method with the smaller endpoint first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn from_values(values: Vec<f64>) -> Option<Self> {
        (values.len() == FEATURE_COUNT).then_some(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left(&self) -> &[f64] {
        &self.values[..METRIC_COUNT]
    }

    pub fn right(&self) -> &[f64] {
        &self.values[METRIC_COUNT..]
    }
}

pub fn featurize(a: (&Endpoint, &MetricsVector), b: (&Endpoint, &MetricsVector)) -> FeatureVector {
    let (first, second) = if a.0 <= b.0 { (a.1, b.1) } else { (b.1, a.1) };
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend(first.to_array());
    values.extend(second.to_array());
    FeatureVector { values }
}

pub fn feature_names() -> Vec<String> {
    ["left", "right"]
        .iter()
        .flat_map(|side| METRIC_NAMES.iter().map(move |m| format!("{side}_{m}")))
        .collect()
}

/// Anything that scores a feature vector as a clone probability.
pub trait Classifier: Send + Sync {
    fn predict(&self, fv: &FeatureVector) -> Result<f64, ClassifierError>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::parse_method;
    use crate::metrics::compute_metrics;

    fn metrics(src: &str) -> MetricsVector {
        compute_metrics(&parse_method(src).unwrap())
    }

    #[test]
    fn canonical_order_and_length() {
        let ea = Endpoint::new("d", "A.java", 1, 5);
        let eb = Endpoint::new("d", "B.java", 1, 5);
        let ma = metrics("int f(int a){return a+1;}");
        let mb = metrics("void g(){ for(;;){ h(); } }");
        let ab = featurize((&ea, &ma), (&eb, &mb));
        let ba = featurize((&eb, &mb), (&ea, &ma));
        assert_eq!(ab, ba);
        assert_eq!(ab.values().len(), 48);
        assert_eq!(ab.left(), ma.to_array());
        let same = featurize((&ea, &ma), (&ea, &ma));
        assert_eq!(same.left(), same.right());
        assert_eq!(feature_names().len(), 48);
        assert_eq!(feature_names()[24], "right_XMET");
    }
}
