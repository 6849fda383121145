//! Training-set curation from detector outputs: positives from the
//! intersection of several tools, negatives mined from Action-Filter matches
//! that no tool in the union reported.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::{featurize, ClassifierError, RowProvenance, TrainingRow, TrainingSet};
use crate::action::{check_threshold, overlap_similarity};
use crate::analysis::{MethodFacts, Parsed};
use crate::key::{Endpoint, PairKey};
use crate::metrics::metrics_equal;
use crate::stats::draw_sample;

pub struct CurationInput<'a> {
    /// Pair lists whose intersection yields positives (at least two).
    pub tool_outputs: &'a [Vec<PairKey>],
    /// Pair lists whose union is excluded from negatives.
    pub union_outputs: &'a [Vec<PairKey>],
    pub methods: &'a HashMap<Endpoint, MethodFacts>,
    pub theta: f64,
    pub min_tokens: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CurationStats {
    pub tool_pairs: Vec<usize>,
    pub intersection: usize,
    /// Intersection pairs whose methods are missing or do not parse.
    pub unusable: usize,
    pub type1_removed: usize,
    pub type2_removed: usize,
    pub filtered_out: usize,
    pub positive_candidates: usize,
    pub mined_candidates: usize,
    pub negatives_removed: usize,
    pub negative_candidates: usize,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone)]
pub struct Curated {
    pub set: TrainingSet,
    pub positives: Vec<PairKey>,
    pub negatives: Vec<PairKey>,
    pub stats: CurationStats,
}

enum Kind {
    Type1,
    Type2,
    Other,
}

fn kind(a: &MethodFacts, b: &MethodFacts, pa: &Parsed, pb: &Parsed) -> Kind {
    if matches!((&a.digest, &b.digest), (Ok(x), Ok(y)) if x == y) {
        Kind::Type1
    } else if pa.actions.ordered() == pb.actions.ordered()
        && metrics_equal(&pa.metrics, &pb.metrics)
    {
        Kind::Type2
    } else {
        Kind::Other
    }
}

fn parsed<'a>(
    methods: &'a HashMap<Endpoint, MethodFacts>,
    ep: &Endpoint,
) -> Option<(&'a MethodFacts, &'a Parsed)> {
    let f = methods.get(ep)?;
    Some((f, f.parsed.as_ref().ok()?))
}

fn row(key: &PairKey, methods: &HashMap<Endpoint, MethodFacts>, is_clone: bool) -> TrainingRow {
    let (_, pa) = parsed(methods, key.first()).expect("usable pair");
    let (_, pb) = parsed(methods, key.second()).expect("usable pair");
    TrainingRow {
        features: featurize((key.first(), &pa.metrics), (key.second(), &pb.metrics)),
        is_clone,
        provenance: if is_clone {
            RowProvenance::IntersectionPositive
        } else {
            RowProvenance::MinedNegative
        },
    }
}

pub fn curate_training_set(input: &CurationInput<'_>) -> Result<Curated, ClassifierError> {
    let theta =
        check_threshold(input.theta).map_err(|e| ClassifierError::DegenerateData(e.to_string()))?;
    if input.tool_outputs.len() < 2 {
        return Err(ClassifierError::EmptyIntersection);
    }
    let mut stats = CurationStats::default();
    let tool_sets: Vec<BTreeSet<&PairKey>> = input
        .tool_outputs
        .iter()
        .map(|l| l.iter().collect())
        .collect();
    stats.tool_pairs = tool_sets.iter().map(BTreeSet::len).collect();
    let intersection: BTreeSet<&PairKey> = tool_sets[0]
        .iter()
        .copied()
        .filter(|k| tool_sets[1..].iter().all(|s| s.contains(k)))
        .collect();
    stats.intersection = intersection.len();
    if intersection.is_empty() {
        return Err(ClassifierError::EmptyIntersection);
    }

    let mut positives: Vec<PairKey> = Vec::new();
    for key in &intersection {
        let (Some((fa, pa)), Some((fb, pb))) = (
            parsed(input.methods, key.first()),
            parsed(input.methods, key.second()),
        ) else {
            stats.unusable += 1;
            continue;
        };
        match kind(fa, fb, pa, pb) {
            Kind::Type1 => stats.type1_removed += 1,
            Kind::Type2 => stats.type2_removed += 1,
            Kind::Other if overlap_similarity(&pa.actions, &pb.actions).at_least(theta) => {
                positives.push((*key).clone())
            }
            Kind::Other => stats.filtered_out += 1,
        }
    }
    stats.positive_candidates = positives.len();

    let excluded: BTreeSet<&PairKey> = input
        .union_outputs
        .iter()
        .chain(input.tool_outputs.iter())
        .flatten()
        .collect();
    let mined = mine_pairs(input.methods, theta, input.min_tokens);
    stats.mined_candidates = mined.len();
    let mut negatives: Vec<PairKey> = Vec::new();
    for key in mined {
        let (fa, pa) = parsed(input.methods, key.first()).expect("mined from parsed methods");
        let (fb, pb) = parsed(input.methods, key.second()).expect("mined from parsed methods");
        if excluded.contains(&key) || !matches!(kind(fa, fb, pa, pb), Kind::Other) {
            stats.negatives_removed += 1;
        } else {
            negatives.push(key);
        }
    }
    stats.negative_candidates = negatives.len();

    let n = positives.len().min(negatives.len());
    let balance = |keys: Vec<PairKey>, salt: u64| -> Vec<PairKey> {
        draw_sample(keys, Clone::clone, n, input.seed ^ salt).unwrap_or_else(|e| e.available)
    };
    let positives = balance(positives, 0x5051);
    let negatives = balance(negatives, 0x4e45);
    stats.positives = positives.len();
    stats.negatives = negatives.len();

    let rows = positives
        .iter()
        .map(|k| row(k, input.methods, true))
        .chain(negatives.iter().map(|k| row(k, input.methods, false)))
        .collect();
    Ok(Curated {
        set: TrainingSet { rows },
        positives,
        negatives,
        stats,
    })
}

/// All pairs of distinct, parseable methods of at least `min_tokens` tokens
/// whose Action-token similarity reaches `theta`, using an inverted index
/// over token names so only pairs sharing a token are compared.
pub(crate) fn mine_pairs(
    methods: &HashMap<Endpoint, MethodFacts>,
    theta: f64,
    min_tokens: usize,
) -> Vec<PairKey> {
    let mut eligible: Vec<(&Endpoint, &Parsed)> = methods
        .iter()
        .filter(|(_, f)| f.record.language_token_count >= min_tokens)
        .filter_map(|(e, f)| f.parsed.as_ref().ok().map(|p| (e, p)))
        .collect();
    eligible.sort_by(|a, b| a.0.cmp(b.0));

    let mut out = Vec::new();
    let mut check = |i: usize, j: usize| {
        let (ea, pa) = eligible[i];
        let (eb, pb) = eligible[j];
        if overlap_similarity(&pa.actions, &pb.actions).at_least(theta) {
            out.push(PairKey::new(ea.clone(), eb.clone()));
        }
    };
    if theta <= 0.0 {
        for i in 0..eligible.len() {
            for j in i + 1..eligible.len() {
                check(i, j);
            }
        }
        return out;
    }
    let mut index: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, (_, p)) in eligible.iter().enumerate() {
        for t in p.actions.bag().keys() {
            index.entry(t.as_str()).or_default().push(i);
        }
    }
    for (i, (_, p)) in eligible.iter().enumerate() {
        let mut partners: BTreeSet<usize> = BTreeSet::new();
        for t in p.actions.bag().keys() {
            partners.extend(index[t.as_str()].iter().copied().filter(|&j| j > i));
        }
        for j in partners {
            check(i, j);
        }
    }
    out
}
