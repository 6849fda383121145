//! A sampled precision study: intake, sampling, resolution, and the outcome
//! listing. Shared by the batch driver and the service.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::MethodFacts;
use crate::classifier::Classifier;
use crate::corpus::CorpusIndex;
use crate::key::{Endpoint, PairKey};
use crate::knowledge::KbSnapshot;
use crate::outcome::{ResolutionOutcome, Status};
use crate::pairs_csv::{CsvError, ReportedPair, PAIR_HEADER};
use crate::pipeline::{intake, resolve_all, LocatedPair, PipelineConfig};
use crate::stats::{
    compute_precision_report, draw_sample, PrecisionReport, SamplePlan, StatsError, Verdict,
};

pub const DEFAULT_SAMPLE_TARGET: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
    pub confidence: f64,
    pub margin: f64,
    pub sample_target: usize,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            confidence: 0.95,
            margin: 0.05,
            sample_target: DEFAULT_SAMPLE_TARGET,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no pairs left after the size filter")]
    EmptyAfterFilter,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone)]
pub struct Study {
    pub uploaded_pair_count: usize,
    pub filtered_pair_count: usize,
    pub duplicate_count: usize,
    pub plan: SamplePlan,
    /// Sampled pairs in key order.
    pub sample: Vec<LocatedPair>,
    /// One outcome per sampled pair, aligned with `sample`.
    pub outcomes: Vec<(PairKey, ResolutionOutcome)>,
}

impl Study {
    pub fn manual_keys(&self) -> Vec<PairKey> {
        self.outcomes
            .iter()
            .filter(|(_, o)| o.status == Status::Manual)
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn report(
        &self,
        verdicts: &BTreeMap<PairKey, Verdict>,
    ) -> Result<PrecisionReport, StatsError> {
        let mut r = compute_precision_report(&self.outcomes, verdicts)?;
        r.plan = Some(self.plan.clone());
        Ok(r)
    }
}

/// Filters, samples and resolves an uploaded pair list.
pub fn run_study(
    reported: &[ReportedPair],
    corpus: &CorpusIndex,
    facts: &mut HashMap<Endpoint, MethodFacts>,
    kb: &KbSnapshot,
    model: Option<&dyn Classifier>,
    cfg: &StudyConfig,
) -> Result<Study, StudyError> {
    cfg.pipeline
        .validate()
        .map_err(|e| StudyError::InvalidConfig(e.to_string()))?;
    let taken = intake(reported, corpus, facts, &cfg.pipeline);
    if taken.pairs.is_empty() {
        return Err(StudyError::EmptyAfterFilter);
    }
    let population = taken.pairs.len();
    let plan = SamplePlan::new(
        cfg.confidence,
        cfg.margin,
        Some(population),
        cfg.sample_target,
        cfg.seed,
    )?;
    let sample = draw_sample(taken.pairs, |p| p.key().clone(), plan.target_n, plan.seed)
        .unwrap_or_else(|e| e.available);
    let outcomes = resolve_all(&sample, kb, model, &cfg.pipeline);
    Ok(Study {
        uploaded_pair_count: reported.len(),
        filtered_pair_count: population,
        duplicate_count: taken.duplicates,
        plan,
        sample,
        outcomes,
    })
}

/// Columns of the outcome listing, in order.
pub const OUTCOME_HEADER: [&str; 12] = [
    PAIR_HEADER[0],
    PAIR_HEADER[1],
    PAIR_HEADER[2],
    PAIR_HEADER[3],
    PAIR_HEADER[4],
    PAIR_HEADER[5],
    PAIR_HEADER[6],
    PAIR_HEADER[7],
    "status",
    "clone_type",
    "provenance",
    "reason",
];

pub fn write_outcomes<W: Write>(
    w: W,
    outcomes: &[(PairKey, ResolutionOutcome)],
) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CsvError::Io(std::io::Error::other(e));
    wtr.write_record(OUTCOME_HEADER).map_err(io)?;
    for (key, o) in outcomes {
        let mut rec: Vec<String> = key.to_fields().into();
        rec.push(o.status.to_string());
        rec.push(o.clone_type.map(|t| t.to_string()).unwrap_or_default());
        rec.push(o.provenance.to_string());
        rec.push(o.reason.clone().unwrap_or_default());
        wtr.write_record(&rec).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}
