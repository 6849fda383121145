//! Per-pair resolution: knowledge base, then Type I, Type II, Type III,
//! otherwise manual judgment.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{check_threshold, overlap_similarity, InvalidThreshold};
use crate::analysis::MethodFacts;
use crate::classifier::{featurize, Classifier};
use crate::corpus::CorpusIndex;
use crate::key::{Endpoint, PairKey};
use crate::knowledge::{KbSnapshot, KnownLabel};
use crate::metrics::metrics_equal;
use crate::outcome::{CloneType, LabelType, ResolutionOutcome, Status};
use crate::pairs_csv::ReportedPair;
use crate::ratio::Ratio;

/// Syntactic similarity at or above which a Type III pair is VST3.
pub const VST3_FLOOR: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub min_tokens: usize,
    pub theta_t3: f64,
    pub classifier_cutoff: f64,
    pub trust_similarity_floor: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_tokens: 50,
            theta_t3: 0.9,
            classifier_cutoff: 0.5,
            trust_similarity_floor: 0.7,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), InvalidThreshold> {
        check_threshold(self.theta_t3)?;
        check_threshold(self.classifier_cutoff)?;
        check_threshold(self.trust_similarity_floor)?;
        if self.min_tokens == 0 {
            return Err(InvalidThreshold(0.0));
        }
        Ok(())
    }
}

/// Two located methods reported as a clone.
#[derive(Debug, Clone)]
pub struct CandidatePair {
    pub left: MethodFacts,
    pub right: MethodFacts,
    pub key: PairKey,
}

impl CandidatePair {
    pub fn new(left: MethodFacts, right: MethodFacts) -> Self {
        let key = PairKey::new(left.endpoint(), right.endpoint());
        Self { left, right, key }
    }

    pub fn swapped(&self) -> Self {
        Self {
            left: self.right.clone(),
            right: self.left.clone(),
            key: self.key.clone(),
        }
    }
}

/// Type I: identical after removing comments and whitespace.
pub fn resolve_type1(m1: &MethodFacts, m2: &MethodFacts) -> Result<bool, String> {
    Ok(m1.digest.as_ref().map_err(Clone::clone)? == m2.digest.as_ref().map_err(Clone::clone)?)
}

/// Type II: same Action tokens in the same order and identical metrics.
pub fn resolve_type2(m1: &MethodFacts, m2: &MethodFacts) -> Result<bool, String> {
    let a = m1.parsed.as_ref().map_err(Clone::clone)?;
    let b = m2.parsed.as_ref().map_err(Clone::clone)?;
    Ok(a.actions.ordered() == b.actions.ordered() && metrics_equal(&a.metrics, &b.metrics))
}

/// Token-multiset overlap of the normalized method texts.
pub fn syntactic_similarity(m1: &MethodFacts, m2: &MethodFacts) -> Option<Ratio> {
    Some(overlap_similarity(
        m1.syntax.as_ref().ok()?,
        m2.syntax.as_ref().ok()?,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type3Decision {
    AutoTrue(CloneType),
    Undecided(String),
}

pub fn resolve_type3(
    pair: &CandidatePair,
    model: Option<&dyn Classifier>,
    cfg: &PipelineConfig,
) -> Type3Decision {
    let (Ok(a), Ok(b)) = (&pair.left.parsed, &pair.right.parsed) else {
        return Type3Decision::Undecided("method does not parse".into());
    };
    if !overlap_similarity(&a.actions, &b.actions).at_least(cfg.theta_t3) {
        return Type3Decision::Undecided("below action filter".into());
    }
    let Some(model) = model else {
        return Type3Decision::Undecided("no classifier model".into());
    };
    let fv = featurize(
        (&pair.left.endpoint(), &a.metrics),
        (&pair.right.endpoint(), &b.metrics),
    );
    match model.predict(&fv) {
        Ok(p) if p >= cfg.classifier_cutoff => {
            let vst3 = syntactic_similarity(&pair.left, &pair.right)
                .is_some_and(|s| s.at_least(VST3_FLOOR));
            Type3Decision::AutoTrue(if vst3 {
                CloneType::VST3
            } else {
                CloneType::ST3
            })
        }
        Ok(p) => Type3Decision::Undecided(format!("classifier probability {p:.3} below cutoff")),
        Err(e) => Type3Decision::Undecided(format!("classifier unavailable: {e}")),
    }
}

fn known_type(label: &KnownLabel, pair: Option<&CandidatePair>) -> Option<CloneType> {
    if !label.is_clone {
        return None;
    }
    Some(match label.clone_type? {
        LabelType::T1 => CloneType::T1,
        LabelType::T2 => CloneType::T2,
        LabelType::T3 => match label.similarity {
            Some(s) => CloneType::type3_band(s),
            None => {
                let p = pair?;
                CloneType::type3_band_exact(syntactic_similarity(&p.left, &p.right)?)
            }
        },
        LabelType::T4 => CloneType::T4,
    })
}

pub fn resolve_pair(
    pair: &CandidatePair,
    kb: &KbSnapshot,
    model: Option<&dyn Classifier>,
    cfg: &PipelineConfig,
) -> ResolutionOutcome {
    let mut notes = Vec::new();
    if let Some(label) = kb.lookup(&pair.key) {
        if label.is_trusted(cfg.trust_similarity_floor) {
            return ResolutionOutcome::known(label.is_clone, known_type(label, Some(pair)));
        }
        notes.push("knowledge label below trust floor".to_string());
    }
    match resolve_type1(&pair.left, &pair.right) {
        Ok(true) => return ResolutionOutcome::auto(Status::AutoType1, CloneType::T1),
        Ok(false) => {}
        Err(e) => {
            notes.push(format!("unlexable: {e}"));
            return ResolutionOutcome::manual(notes.join("; "));
        }
    }
    match resolve_type2(&pair.left, &pair.right) {
        Ok(true) => return ResolutionOutcome::auto(Status::AutoType2, CloneType::T2),
        Ok(false) => {}
        Err(e) => {
            notes.push(format!("unparseable: {e}"));
            return ResolutionOutcome::manual(notes.join("; "));
        }
    }
    match resolve_type3(pair, model, cfg) {
        Type3Decision::AutoTrue(t) => ResolutionOutcome::auto(Status::AutoType3, t),
        Type3Decision::Undecided(why) => {
            notes.push(why);
            ResolutionOutcome::manual(notes.join("; "))
        }
    }
}

/// A reported pair after locating its methods.
#[derive(Debug, Clone)]
pub enum LocatedPair {
    Found(Box<CandidatePair>),
    /// Methods could not be located; keyed by the reported spans.
    Missing {
        key: PairKey,
        reason: String,
    },
}

impl LocatedPair {
    pub fn key(&self) -> &PairKey {
        match self {
            LocatedPair::Found(p) => &p.key,
            LocatedPair::Missing { key, .. } => key,
        }
    }

    pub fn resolve(
        &self,
        kb: &KbSnapshot,
        model: Option<&dyn Classifier>,
        cfg: &PipelineConfig,
    ) -> ResolutionOutcome {
        match self {
            LocatedPair::Found(p) => resolve_pair(p, kb, model, cfg),
            LocatedPair::Missing { key, reason } => match kb.lookup(key) {
                Some(l) if l.is_trusted(cfg.trust_similarity_floor) => {
                    ResolutionOutcome::known(l.is_clone, known_type(l, None))
                }
                _ => ResolutionOutcome::manual(reason.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Intake {
    /// Distinct pairs that passed the size filter, in upload order.
    pub pairs: Vec<LocatedPair>,
    /// Pairs dropped because a method is below the token minimum.
    pub too_small: usize,
    /// Rows whose key repeats an earlier row.
    pub duplicates: usize,
}

/// Locates uploaded pairs in the corpus and applies the size filter.
/// Unlocatable pairs are kept and later routed to manual judgment.
pub fn intake(
    reported: &[ReportedPair],
    corpus: &CorpusIndex,
    facts: &mut HashMap<Endpoint, MethodFacts>,
    cfg: &PipelineConfig,
) -> Intake {
    let mut out = Intake::default();
    let mut seen = std::collections::HashSet::new();
    for r in reported {
        let located = (corpus.locate(&r.left), corpus.locate(&r.right));
        let pair = match located {
            (Ok(a), Ok(b)) => {
                if a.language_token_count < cfg.min_tokens
                    || b.language_token_count < cfg.min_tokens
                {
                    out.too_small += 1;
                    continue;
                }
                let fa = facts
                    .entry(a.endpoint())
                    .or_insert_with(|| MethodFacts::new(a.clone()))
                    .clone();
                let fb = facts
                    .entry(b.endpoint())
                    .or_insert_with(|| MethodFacts::new(b.clone()))
                    .clone();
                LocatedPair::Found(Box::new(CandidatePair::new(fa, fb)))
            }
            (ra, rb) => {
                let reason = [ra.err(), rb.err()]
                    .into_iter()
                    .flatten()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join("; ");
                LocatedPair::Missing {
                    key: PairKey::new(r.left.clone(), r.right.clone()),
                    reason: format!("line {}: {reason}", r.line),
                }
            }
        };
        if seen.insert(pair.key().clone()) {
            out.pairs.push(pair);
        } else {
            out.duplicates += 1;
        }
    }
    out
}

/// Resolves pairs in parallel; output order matches input order.
pub fn resolve_all(
    pairs: &[LocatedPair],
    kb: &KbSnapshot,
    model: Option<&dyn Classifier>,
    cfg: &PipelineConfig,
) -> Vec<(PairKey, ResolutionOutcome)> {
    pairs
        .par_iter()
        .map(|p| (p.key().clone(), p.resolve(kb, model, cfg)))
        .collect()
}
