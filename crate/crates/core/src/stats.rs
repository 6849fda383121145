//! Sample sizes, sampling, vote aggregation and precision reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::key::PairKey;
use crate::outcome::{ResolutionOutcome, Status};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no votes")]
    NoVotes,
    #[error("experiment incomplete: {} pair(s) without a verdict", missing.len())]
    IncompleteExperiment { missing: Vec<PairKey> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub confidence: f64,
    pub margin: f64,
    pub population: Option<usize>,
    /// Minimum sample size for the confidence and margin.
    pub required_n: usize,
    /// Sample size actually drawn; at least `required_n` unless the population is smaller.
    pub target_n: usize,
    pub seed: u64,
}

impl SamplePlan {
    /// Plans a sample of `max(required, oversample)` capped by the population.
    pub fn new(
        confidence: f64,
        margin: f64,
        population: Option<usize>,
        oversample: usize,
        seed: u64,
    ) -> Result<Self, StatsError> {
        let required_n = required_sample_size(confidence, margin, population)?;
        let mut target_n = required_n.max(oversample);
        if let Some(n) = population {
            target_n = target_n.min(n);
        }
        Ok(Self {
            confidence,
            margin,
            population,
            required_n,
            target_n,
            seed,
        })
    }
}

/// Cochran's sample size at p = 0.5, with finite-population correction when
/// `population` is given.
pub fn required_sample_size(
    confidence: f64,
    margin: f64,
    population: Option<usize>,
) -> Result<usize, StatsError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidParameter(format!(
            "confidence {confidence} not in (0, 1)"
        )));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(StatsError::InvalidParameter(format!(
            "margin {margin} not in (0, 1)"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z = normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n0 = (z * z * 0.25 / (margin * margin)).ceil();
    match population {
        None => Ok(n0 as usize),
        Some(0) => Err(StatsError::InvalidParameter("population is empty".into())),
        Some(n) => {
            let big_n = n as f64;
            let corrected = (n0 / (1.0 + (n0 - 1.0) / big_n)).ceil() as usize;
            Ok(corrected.clamp(1, n))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("requested {requested} pairs but only {} are available", available.len())]
pub struct InsufficientPairs<T> {
    pub requested: usize,
    /// Every available item, in key order.
    pub available: Vec<T>,
}

impl<T> InsufficientPairs<T> {
    pub fn shortfall(&self) -> usize {
        self.requested - self.available.len()
    }
}

/// Uniform sample of `n` items without replacement. Items are first sorted by
/// `key`, so the result depends only on the item set and the seed. The sample
/// is returned in key order.
pub fn draw_sample<T, K: Ord>(
    mut items: Vec<T>,
    key: impl Fn(&T) -> K,
    n: usize,
    seed: u64,
) -> Result<Vec<T>, InsufficientPairs<T>> {
    items.sort_by_key(&key);
    if n > items.len() {
        return Err(InsufficientPairs {
            requested: n,
            available: items,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    let mut chosen = vec![false; items.len()];
    for i in picked {
        chosen[i] = true;
    }
    Ok(items
        .into_iter()
        .zip(chosen)
        .filter_map(|(item, keep)| keep.then_some(item))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    TP,
    FP,
}

/// Strict majority: true positive only when more than half the votes say clone.
pub fn aggregate_votes(votes: &[bool]) -> Result<Verdict, StatsError> {
    if votes.is_empty() {
        return Err(StatsError::NoVotes);
    }
    let yes = votes.iter().filter(|v| **v).count();
    Ok(if 2 * yes > votes.len() {
        Verdict::TP
    } else {
        Verdict::FP
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AutoCounts {
    pub type1: usize,
    pub type2: usize,
    pub type3: usize,
    pub known_true: usize,
    pub known_false: usize,
}

impl AutoCounts {
    pub fn total(&self) -> usize {
        self.type1 + self.type2 + self.type3 + self.known_true + self.known_false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub key: PairKey,
    pub outcome: ResolutionOutcome,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub sample_size: usize,
    pub auto_counts: AutoCounts,
    pub manual_count: usize,
    pub tp: usize,
    pub fp: usize,
    pub precision: f64,
    pub effort_reduction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplePlan>,
    pub pairs: Vec<PairReport>,
}

/// Auto-resolved and known-true pairs count as true positives, known-false as
/// false positives, and manual pairs take their aggregated verdict.
pub fn compute_precision_report(
    resolutions: &[(PairKey, ResolutionOutcome)],
    verdicts: &BTreeMap<PairKey, Verdict>,
) -> Result<PrecisionReport, StatsError> {
    let mut counts = AutoCounts::default();
    let mut manual = 0;
    let mut missing = Vec::new();
    let mut pairs = Vec::with_capacity(resolutions.len());
    for (key, outcome) in resolutions {
        let verdict = match outcome.status {
            Status::AutoType1 => {
                counts.type1 += 1;
                Verdict::TP
            }
            Status::AutoType2 => {
                counts.type2 += 1;
                Verdict::TP
            }
            Status::AutoType3 => {
                counts.type3 += 1;
                Verdict::TP
            }
            Status::KnownTrue => {
                counts.known_true += 1;
                Verdict::TP
            }
            Status::KnownFalse => {
                counts.known_false += 1;
                Verdict::FP
            }
            Status::Manual => {
                manual += 1;
                match verdicts.get(key) {
                    Some(v) => *v,
                    None => {
                        missing.push(key.clone());
                        continue;
                    }
                }
            }
        };
        pairs.push(PairReport {
            key: key.clone(),
            outcome: outcome.clone(),
            verdict,
        });
    }
    if !missing.is_empty() {
        return Err(StatsError::IncompleteExperiment { missing });
    }
    let sample_size = resolutions.len();
    let tp = pairs.iter().filter(|p| p.verdict == Verdict::TP).count();
    let (precision, effort_reduction) = if sample_size == 0 {
        (0.0, 0.0)
    } else {
        let n = sample_size as f64;
        (tp as f64 / n, (sample_size - manual) as f64 / n)
    };
    Ok(PrecisionReport {
        sample_size,
        auto_counts: counts,
        manual_count: manual,
        tp,
        fp: sample_size - tp,
        precision,
        effort_reduction,
        plan: None,
        pairs,
    })
}

impl PrecisionReport {
    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let c = &self.auto_counts;
        let rows: [(&str, String); 12] = [
            ("Sampled pairs", self.sample_size.to_string()),
            ("Auto Type I", c.type1.to_string()),
            ("Auto Type II", c.type2.to_string()),
            ("Auto Type III", c.type3.to_string()),
            ("Known true", c.known_true.to_string()),
            ("Known false", c.known_false.to_string()),
            ("Manual", self.manual_count.to_string()),
            ("True positives", self.tp.to_string()),
            ("False positives", self.fp.to_string()),
            ("Precision", format!("{:.1}%", self.precision * 100.0)),
            (
                "Effort reduction",
                format!("{:.1}%", self.effort_reduction * 100.0),
            ),
            (
                "Required sample",
                self.plan
                    .as_ref()
                    .map(|p| {
                        format!(
                            "{} ({:.0}% / {:.0}%)",
                            p.required_n,
                            p.confidence * 100.0,
                            p.margin * 100.0
                        )
                    })
                    .unwrap_or_else(|| "-".into()),
            ),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>12}");
        }
        out
    }
}
