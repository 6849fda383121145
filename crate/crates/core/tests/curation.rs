use std::collections::{BTreeMap, BTreeSet, HashMap};

use clonejudge_core::analysis::MethodFacts;
use clonejudge_core::classifier::{curate_training_set, ClassifierError, CurationInput};
use clonejudge_core::corpus::{extract_methods, SourceFile};
use clonejudge_core::key::{Endpoint, PairKey};
use clonejudge_testkit::{rng, Skeleton};

fn facts_for(sources: &[String]) -> (Vec<Endpoint>, HashMap<Endpoint, MethodFacts>) {
    let mut eps = Vec::new();
    let mut map = HashMap::new();
    for (i, src) in sources.iter().enumerate() {
        let file = SourceFile {
            corpus_root: "/desk".into(),
            folder_name: "desk".into(),
            file_name: format!("M{i}.java"),
            content: format!("class M{i} {{\n{src}}}\n"),
        };
        let rec = extract_methods(&file).unwrap().remove(0);
        eps.push(rec.endpoint());
        map.insert(rec.endpoint(), MethodFacts::new(rec));
    }
    (eps, map)
}

fn bag(f: &MethodFacts) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    for t in f.parsed.as_ref().unwrap().actions.ordered() {
        *m.entry(t.clone()).or_insert(0) += 1;
    }
    m
}

/// Shared count over the larger total, compared as integers against 9/10.
fn similar(a: &MethodFacts, b: &MethodFacts) -> bool {
    let (x, y) = (bag(a), bag(b));
    let shared: u64 = x
        .iter()
        .map(|(k, v)| (*v).min(*y.get(k).unwrap_or(&0)))
        .sum();
    let larger = x.values().sum::<u64>().max(y.values().sum());
    larger > 0 && shared * 10 >= larger * 9
}

fn same_kind12(a: &MethodFacts, b: &MethodFacts) -> bool {
    let (pa, pb) = (a.parsed.as_ref().unwrap(), b.parsed.as_ref().unwrap());
    a.digest == b.digest
        || (pa.actions.ordered() == pb.actions.ordered()
            && pa.metrics.to_array() == pb.metrics.to_array())
}

#[test]
fn desk_curation_matches_set_algebra() {
    let mut r = rng(11);
    let bases: Vec<Skeleton> = (0..3).map(|i| Skeleton::random(i, &mut r)).collect();
    let sources = vec![
        bases[0].source(),
        bases[0].with_extra_statement(1).source(),
        bases[0].render(&bases[0].random_naming(&mut r)),
        bases[0].decoy("spread0".into()).source(),
        bases[1].source(),
        bases[1].with_extra_statement(0).source(),
        bases[1].decoy("spread1".into()).source(),
        bases[2].source(),
        bases[2].with_extra_statement(2).source(),
        bases[2]
            .with_extra_statement(3)
            .with_extra_statement(0)
            .source(),
    ];
    let (e, methods) = facts_for(&sources);
    let k = |a: usize, b: usize| PairKey::new(e[a].clone(), e[b].clone());
    let tool_a = vec![k(0, 1), k(0, 2), k(4, 5), k(7, 8), k(0, 4)];
    let tool_b = vec![k(1, 0), k(2, 0), k(5, 4), k(8, 7), k(7, 9)];
    let union_only = vec![k(8, 9)];

    let curated = curate_training_set(&CurationInput {
        tool_outputs: &[tool_a.clone(), tool_b.clone()],
        union_outputs: std::slice::from_ref(&union_only),
        methods: &methods,
        theta: 0.9,
        min_tokens: 50,
        seed: 5,
    })
    .unwrap();

    let sa: BTreeSet<_> = tool_a.iter().cloned().collect();
    let sb: BTreeSet<_> = tool_b.iter().cloned().collect();
    let inter: BTreeSet<PairKey> = sa.intersection(&sb).cloned().collect();
    let f = |ep: &Endpoint| &methods[ep];
    let pos: BTreeSet<PairKey> = inter
        .iter()
        .filter(|p| {
            !same_kind12(f(p.first()), f(p.second())) && similar(f(p.first()), f(p.second()))
        })
        .cloned()
        .collect();
    let excluded: BTreeSet<PairKey> = sa
        .union(&sb)
        .cloned()
        .chain(union_only.iter().cloned())
        .collect();
    let mut neg = BTreeSet::new();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let key = k(i, j);
            let (a, b) = (f(&e[i]), f(&e[j]));
            if a.record.language_token_count >= 50
                && b.record.language_token_count >= 50
                && similar(a, b)
                && !same_kind12(a, b)
                && !excluded.contains(&key)
            {
                neg.insert(key);
            }
        }
    }

    assert_eq!(curated.stats.intersection, inter.len());
    assert_eq!(curated.stats.positive_candidates, pos.len());
    assert_eq!(curated.stats.negative_candidates, neg.len());
    assert!(!pos.is_empty() && !neg.is_empty());
    let n = pos.len().min(neg.len());
    assert_eq!((curated.positives.len(), curated.negatives.len()), (n, n));
    assert!(curated.positives.iter().all(|p| pos.contains(p)));
    assert!(curated.negatives.iter().all(|p| neg.contains(p)));
    let cp: BTreeSet<_> = curated.positives.iter().collect();
    assert!(curated.negatives.iter().all(|p| !cp.contains(p)));
    assert_eq!(curated.set.positives(), n);
    assert_eq!(curated.set.negatives(), n);
}

#[test]
fn single_list_has_no_intersection() {
    let (_, methods) = facts_for(&[]);
    let err = curate_training_set(&CurationInput {
        tool_outputs: &[vec![]],
        union_outputs: &[],
        methods: &methods,
        theta: 0.9,
        min_tokens: 50,
        seed: 0,
    })
    .unwrap_err();
    assert!(matches!(err, ClassifierError::EmptyIntersection));
}
