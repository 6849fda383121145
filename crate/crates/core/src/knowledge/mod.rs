//! Known pair labels: seed imports plus judge votes that reach finality.

mod seed;
mod store;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::key::PairKey;
use crate::outcome::LabelType;

pub use seed::{read_seed, ImportSummary, SeedRow, SEED_HEADER};
pub use store::KnowledgeStore;

pub const FINAL_MIN_VOTES: usize = 10;
/// Agreement needed for finality, as a fraction `num / den`.
pub const FINAL_AGREEMENT: (usize, usize) = (7, 10);
pub const DEFAULT_TRUST_FLOOR: f64 = 0.7;

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("unknown judge `{0}`")]
    UnknownJudge(String),
    #[error("clone type {0} cannot be assigned by a judge")]
    IllegalCloneType(LabelType),
    #[error("storage: {0}")]
    Storage(#[from] rusqlite::Error),
    #[error(transparent)]
    Csv(#[from] crate::pairs_csv::CsvError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub judge_id: String,
    pub is_clone: bool,
    pub clone_type: Option<LabelType>,
    pub comment: Option<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

/// Votes on one pair, at most one per judge.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VoteLedger {
    votes: BTreeMap<String, Vote>,
}

impl VoteLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the judge's vote.
    pub fn upsert(&mut self, vote: Vote) -> Result<(), KnowledgeError> {
        if vote.clone_type == Some(LabelType::T1) {
            return Err(KnowledgeError::IllegalCloneType(LabelType::T1));
        }
        self.votes.insert(vote.judge_id.clone(), vote);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn votes(&self) -> impl Iterator<Item = &Vote> {
        self.votes.values()
    }

    pub fn get(&self, judge_id: &str) -> Option<&Vote> {
        self.votes.get(judge_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    SeedImport,
    CommunityFinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownLabel {
    pub key: PairKey,
    pub is_clone: bool,
    pub clone_type: Option<LabelType>,
    pub similarity: Option<f64>,
    pub source: LabelSource,
    pub vote_count: usize,
    pub agreement_ratio: f64,
}

impl KnownLabel {
    /// Whether the pipeline may act on this label. Seeded Type III and IV
    /// labels need a syntactic similarity of at least `floor`.
    pub fn is_trusted(&self, floor: f64) -> bool {
        match (self.source, self.clone_type) {
            (LabelSource::CommunityFinal, _) => true,
            (LabelSource::SeedImport, Some(LabelType::T3 | LabelType::T4)) => {
                self.similarity.is_some_and(|s| s >= floor)
            }
            (LabelSource::SeedImport, _) => true,
        }
    }
}

/// A label is final once at least ten judges voted and at least 70% agree.
pub fn finalize_check(key: &PairKey, ledger: &VoteLedger) -> Option<KnownLabel> {
    let n = ledger.len();
    if n < FINAL_MIN_VOTES {
        return None;
    }
    let yes = ledger.votes().filter(|v| v.is_clone).count();
    let agree = yes.max(n - yes);
    let (num, den) = FINAL_AGREEMENT;
    if agree * den < num * n {
        return None;
    }
    let is_clone = 2 * yes > n;
    let clone_type = if is_clone {
        modal_type(
            ledger
                .votes()
                .filter(|v| v.is_clone)
                .filter_map(|v| v.clone_type),
        )
    } else {
        None
    };
    Some(KnownLabel {
        key: key.clone(),
        is_clone,
        clone_type,
        similarity: None,
        source: LabelSource::CommunityFinal,
        vote_count: n,
        agreement_ratio: agree as f64 / n as f64,
    })
}

/// The single most frequent type; ties and no types give `None`.
fn modal_type(types: impl Iterator<Item = LabelType>) -> Option<LabelType> {
    let mut counts: BTreeMap<LabelType, usize> = BTreeMap::new();
    for t in types {
        *counts.entry(t).or_default() += 1;
    }
    let best = *counts.values().max()?;
    let mut top = counts.into_iter().filter(|(_, c)| *c == best);
    let (t, _) = top.next()?;
    top.next().is_none().then_some(t)
}

/// Read-only view of final labels, taken when an experiment starts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KbSnapshot {
    labels: HashMap<PairKey, KnownLabel>,
}

impl KbSnapshot {
    pub fn new(labels: impl IntoIterator<Item = KnownLabel>) -> Self {
        Self {
            labels: labels.into_iter().map(|l| (l.key.clone(), l)).collect(),
        }
    }

    pub fn lookup(&self, key: &PairKey) -> Option<&KnownLabel> {
        self.labels.get(key)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
