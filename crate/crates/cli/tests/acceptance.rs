//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use clonejudge_cli::{cmd_curate, cmd_resolve, cmd_study, cmd_train, CurateArgs, Inputs};
use clonejudge_core::action::{overlap_similarity, passes_action_filter, ActionTokenSequence};
use clonejudge_core::analysis::MethodFacts;
use clonejudge_core::classifier::{
    featurize, Classifier, ClassifierError, ClassifierModel, FeatureVector, Hyperparams,
};
use clonejudge_core::corpus::{CorpusIndex, MethodRecord};
use clonejudge_core::key::{Endpoint, PairKey};
use clonejudge_core::knowledge::{finalize_check, KbSnapshot, KnowledgeStore, Vote, VoteLedger};
use clonejudge_core::outcome::Status;
use clonejudge_core::pipeline::{
    resolve_pair, resolve_type1, resolve_type2, CandidatePair, PipelineConfig,
};
use clonejudge_core::stats::{aggregate_votes, required_sample_size, StatsError, Verdict};
use clonejudge_core::study::StudyConfig;
use clonejudge_testkit::{pair_row, perturb_layout, rng, CorpusBuilder, Skeleton, Span};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn facts(file: &str, src: &str) -> MethodFacts {
    MethodFacts::new(MethodRecord {
        folder: "gen".into(),
        file: file.into(),
        name: "m".into(),
        start_line: 1,
        end_line: src.lines().count(),
        source: src.into(),
        language_token_count: 100,
    })
}

fn type1_variants() -> Check {
    let started = Instant::now();
    let mut r = rng(101);
    let mut variants = Vec::new();
    for b in 0..20 {
        let base = Skeleton::random(b, &mut r).source();
        for v in 0..10 {
            variants.push((
                b,
                facts(&format!("V{b}_{v}.java"), &perturb_layout(&base, &mut r)),
            ));
        }
    }
    let (mut same, mut cross) = (0usize, 0usize);
    for (i, (bi, fi)) in variants.iter().enumerate() {
        for (bj, fj) in &variants[i + 1..] {
            let hit = resolve_type1(fi, fj)?;
            if bi == bj {
                ensure(hit, || format!("variants of base {bi} not matched"))?;
                same += 1;
            } else {
                ensure(!hit, || format!("bases {bi} and {bj} matched"))?;
                cross += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{same} same-base true, {cross} cross-base false, {elapsed:.2?}"
    ))
}

/// Hand-worked pairs: expected ordered action tokens for each side and the
/// expected Type II verdict.
type SpotCheck = (
    &'static str,
    &'static str,
    &'static [&'static str],
    &'static [&'static str],
    bool,
);

const SPOT_CHECKS: [SpotCheck; 10] = [
    (
        "int f(int[] a,int i){ int s = a[i] + a[i+1]; return helper(s); }",
        "int f(int[] q,int k){ int t = q[k] + q[k+1]; return helper(t); }",
        &["ArrayAccess", "ArrayAccessBinary", "helper"],
        &["ArrayAccess", "ArrayAccessBinary", "helper"],
        true,
    ),
    (
        "void g(){ this.count = size(); reset(); }",
        "void g(){ reset(); this.count = size(); }",
        &["count", "size", "reset"],
        &["reset", "count", "size"],
        false,
    ),
    (
        "String h(String s){ return s.trim().toLowerCase(); }",
        "String h(String v){ return v.trim().toLowerCase(); }",
        &["trim", "toLowerCase"],
        &["trim", "toLowerCase"],
        true,
    ),
    (
        "int k(int x){ if(x > 3){ return compute(x); } return 0; }",
        "int k(int y){ if(y > 9){ return compute(y); } return 1; }",
        &["compute"],
        &["compute"],
        true,
    ),
    (
        "int k(int x){ if(x > 3){ return compute(x); } return 0; }",
        "int k(int x){ x = x + 1; if(x > 3){ return compute(x); } return 0; }",
        &["compute"],
        &["compute"],
        false,
    ),
    (
        "void m(){ load(); save(); }",
        "void m(){ load(); store(); }",
        &["load", "save"],
        &["load", "store"],
        false,
    ),
    (
        "int n(){ return this.width * 2; }",
        "int n(){ return this.height * 2; }",
        &["width"],
        &["height"],
        false,
    ),
    (
        "void p(int a){ log(a); }",
        "void p( int a )\n{\n    // trace\n    log( a );\n}",
        &["log"],
        &["log"],
        true,
    ),
    (
        "int q(int[] v){ int t=0; for(int i=0;i<v.length;i++){ t += v[i]; } return t; }",
        "int q(int[] w){ int u=0; for(int j=0;j<w.length;j++){ u += w[j]; } return u; }",
        &["length", "ArrayAccess"],
        &["length", "ArrayAccess"],
        true,
    ),
    (
        "void r(Node n){ n.next.visit(n.value); }",
        "void r(Node n){ n.value.visit(n.next); }",
        &["next", "visit", "value"],
        &["value", "visit", "next"],
        false,
    ),
];

fn type2_algorithm() -> Check {
    let mut r = rng(202);
    let (mut renames, mut reorders, mut additions) = (0, 0, 0);
    for id in 0..50 {
        let base = Skeleton::random(id, &mut r);
        let b = facts("B.java", &base.source());
        for _ in 0..3 {
            let renamed = facts("R.java", &base.render(&base.random_naming(&mut r)));
            ensure(resolve_type2(&b, &renamed)?, || {
                format!("rename of base {id} rejected")
            })?;
            renames += 1;
        }
        for (i, j) in base.swappable_calls() {
            let swapped = facts("S.java", &base.swap(i, j).source());
            ensure(!resolve_type2(&b, &swapped)?, || {
                format!("swap {i},{j} of base {id} accepted")
            })?;
            reorders += 1;
        }
        for at in 0..=base.statement_count() {
            let grown = facts("G.java", &base.with_extra_statement(at).source());
            ensure(!resolve_type2(&b, &grown)?, || {
                format!("insertion at {at} of base {id} accepted")
            })?;
            additions += 1;
        }
    }
    for (n, (left, right, lt, rt, expect)) in SPOT_CHECKS.iter().enumerate() {
        let (a, b) = (facts("L.java", left), facts("R.java", right));
        let tokens = |f: &MethodFacts| {
            f.parsed
                .as_ref()
                .map(|p| p.actions.ordered().to_vec())
                .unwrap_or_default()
        };
        ensure(tokens(&a) == *lt, || {
            format!("spot check {n}: left tokens {:?}", tokens(&a))
        })?;
        ensure(tokens(&b) == *rt, || {
            format!("spot check {n}: right tokens {:?}", tokens(&b))
        })?;
        let got = resolve_type2(&a, &b)?;
        ensure(got == *expect, || format!("spot check {n}: got {got}"))?;
    }
    Ok(format!(
        "{renames} renames true, {reorders} reorders and {additions} insertions false, {} spot checks",
        SPOT_CHECKS.len()
    ))
}

/// Intersection by repeatedly removing matched elements from a copy.
fn brute_overlap(a: &[String], b: &[String]) -> (u64, u64) {
    let mut pool = b.to_vec();
    let mut shared = 0;
    for t in a {
        if let Some(i) = pool.iter().position(|x| x == t) {
            pool.swap_remove(i);
            shared += 1;
        }
    }
    (shared, a.len().max(b.len()) as u64)
}

fn action_math() -> Check {
    let mut r = rng(303);
    let alphabet = [
        "get",
        "set",
        "put",
        "size",
        "ArrayAccess",
        "ArrayAccessBinary",
        "next",
        "x",
    ];
    let bag = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
        let n = r.random_range(0..12);
        (0..n)
            .map(|_| alphabet[r.random_range(0..alphabet.len())].to_string())
            .collect()
    };
    for i in 0..1000 {
        let (a, b) = (bag(&mut r), bag(&mut r));
        let got = overlap_similarity(
            &ActionTokenSequence::from_tokens(&a),
            &ActionTokenSequence::from_tokens(&b),
        );
        let (num, den) = brute_overlap(&a, &b);
        let equal = if den == 0 {
            got.numer() == 0
        } else {
            u128::from(got.numer()) * u128::from(den) == u128::from(num) * u128::from(got.denom())
        };
        ensure(equal, || {
            format!("bag {i}: {}/{} vs {num}/{den}", got.numer(), got.denom())
        })?;
    }
    let mut boundaries = 0;
    for shared in 1..=10 {
        let a: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let b: Vec<String> = (0..10)
            .map(|i| {
                if i < shared {
                    format!("t{i}")
                } else {
                    format!("u{i}")
                }
            })
            .collect();
        let (sa, sb) = (
            ActionTokenSequence::from_tokens(&a),
            ActionTokenSequence::from_tokens(&b),
        );
        let theta = shared as f64 / 10.0;
        ensure(passes_action_filter(&sa, &sb, theta).unwrap(), || {
            format!("similarity {theta} fails at theta {theta}")
        })?;
        if shared < 10 {
            let above = (shared + 1) as f64 / 10.0;
            ensure(!passes_action_filter(&sa, &sb, above).unwrap(), || {
                format!("similarity {theta} passes {above}")
            })?;
        }
        boundaries += 1;
    }
    Ok(format!(
        "1000 bags exact, {boundaries} boundary thresholds inclusive"
    ))
}

/// Two-sided normal quantiles from standard tables.
const Z_95: f64 = 1.959_963_984_540_054;
const Z_99: f64 = 2.575_829_303_549_0;
const CHOSEN_SAMPLE_SIZES: [(f64, f64, usize); 2] = [(0.95, 0.05, 400), (0.99, 0.03, 1851)];

fn sample_sizes() -> Check {
    let cochran = |z: f64, e: f64| (z * z * 0.25 / (e * e)).ceil() as usize;
    let expected = [cochran(Z_95, 0.05), cochran(Z_99, 0.03)];
    ensure(expected == [385, 1844], || {
        format!("oracle gave {expected:?}")
    })?;
    let mut lines = Vec::new();
    for ((conf, margin, chosen), want) in CHOSEN_SAMPLE_SIZES.into_iter().zip(expected) {
        let got = required_sample_size(conf, margin, None).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("({conf}, {margin}) gave {got}, expected {want}")
        })?;
        ensure(chosen >= got, || format!("{chosen} below minimum {got}"))?;
        lines.push(format!("({conf}, {margin}) = {got} <= {chosen}"));
    }
    Ok(lines.join(", "))
}

fn vote(judge: usize, is_clone: bool) -> Vote {
    Vote {
        judge_id: format!("j{judge}"),
        is_clone,
        clone_type: None,
        comment: None,
        timestamp: 0,
    }
}

fn votes_and_finalization() -> Check {
    let mut vectors = 0;
    for len in 0..=5u32 {
        for mask in 0..(1u32 << len) {
            let v: Vec<bool> = (0..len).map(|i| mask >> i & 1 == 1).collect();
            let yes = v.iter().filter(|b| **b).count();
            let got = aggregate_votes(&v);
            let ok = match (len, got) {
                (0, Err(StatsError::NoVotes)) => true,
                (_, Ok(verdict)) => {
                    verdict
                        == if yes > v.len() - yes {
                            Verdict::TP
                        } else {
                            Verdict::FP
                        }
                }
                _ => false,
            };
            ensure(ok, || format!("votes {v:?}"))?;
            vectors += 1;
        }
    }
    let key = PairKey::new(
        Endpoint::new("a", "A.java", 1, 9),
        Endpoint::new("b", "B.java", 1, 9),
    );
    for (n, agree, final_) in [(10, 7, true), (10, 6, false), (9, 9, false)] {
        let mut ledger = VoteLedger::new();
        for j in 0..n {
            ledger
                .upsert(vote(j, j < agree))
                .map_err(|e| e.to_string())?;
        }
        let got = finalize_check(&key, &ledger).is_some();
        ensure(got == final_, || format!("({n}, {agree}) final = {got}"))?;
    }
    Ok(format!(
        "{vectors} vote vectors, finalization table (10,7) (10,6) (9,9)"
    ))
}

struct Sabotage;

impl Classifier for Sabotage {
    fn predict(&self, _: &FeatureVector) -> Result<f64, ClassifierError> {
        Ok(1.0)
    }
}

fn oracle_passes(a: &MethodFacts, b: &MethodFacts) -> bool {
    let count = |f: &MethodFacts| {
        let mut m: BTreeMap<String, u64> = BTreeMap::new();
        for t in f.parsed.as_ref().unwrap().actions.ordered() {
            *m.entry(t.clone()).or_default() += 1;
        }
        m
    };
    let (ca, cb) = (count(a), count(b));
    let shared: u64 = ca
        .iter()
        .map(|(t, n)| (*n).min(cb.get(t).copied().unwrap_or(0)))
        .sum();
    let larger = ca.values().sum::<u64>().max(cb.values().sum());
    larger > 0 && 10 * shared >= 9 * larger
}

fn gate_safety() -> Check {
    let mut r = rng(404);
    let mut pool: Vec<Vec<MethodFacts>> = Vec::new();
    for id in 0..60 {
        let base = Skeleton::random(id, &mut r);
        let mut family = vec![facts(&format!("B{id}.java"), &base.source())];
        family.push(facts(
            &format!("G{id}.java"),
            &base.with_extra_statement(id % 4).source(),
        ));
        let (i, j) = base.swappable_calls()[0];
        family.push(facts(&format!("S{id}.java"), &base.swap(i, j).source()));
        family.push(facts(
            &format!("D{id}.java"),
            &base.decoy(format!("decoy{id}")).source(),
        ));
        family.push(facts(
            &format!("R{id}.java"),
            &base.render(&base.random_naming(&mut r)),
        ));
        pool.push(family);
    }
    let cfg = PipelineConfig::default();
    let kb = KbSnapshot::default();
    let (mut failing, mut auto3) = (0, 0);
    for n in 0..500 {
        let fa = r.random_range(0..pool.len());
        let fb = if n % 2 == 0 {
            fa
        } else {
            r.random_range(0..pool.len())
        };
        let a = &pool[fa][r.random_range(0..5)];
        let b = &pool[fb][r.random_range(0..5)];
        let outcome = resolve_pair(
            &CandidatePair::new(a.clone(), b.clone()),
            &kb,
            Some(&Sabotage),
            &cfg,
        );
        if outcome.status == Status::AutoType3 {
            auto3 += 1;
        }
        if !oracle_passes(a, b) {
            failing += 1;
            ensure(outcome.status != Status::AutoType3, || {
                format!("pair {n} failed the filter but became Type III")
            })?;
        }
    }
    ensure(failing > 0 && auto3 > 0, || {
        format!("degenerate fixture: {failing} failing, {auto3} auto")
    })?;
    Ok(format!("500 pairs, {failing} below the filter, 0 of them auto Type III ({auto3} auto Type III above)"))
}

fn write(path: &Path, rows: &[(Span, Span)], suffix: impl Fn(usize) -> String) {
    let text: String = rows
        .iter()
        .enumerate()
        .map(|(i, (a, b))| format!("{}{}\n", pair_row(a, b), suffix(i)))
        .collect();
    fs::write(path, text).unwrap();
}

fn desk_study() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("corpus");
    let mut b = CorpusBuilder::new(&root);
    let mut r = rng(505);
    let mut next = 0;
    let mut base = |r: &mut rand_chacha::ChaCha8Rng| {
        next += 1;
        Skeleton::random(next, r)
    };
    let mut add = |folder: &str, src: String| b.add(folder, &src).unwrap();
    let mut auto = Vec::new();
    for _ in 0..3 {
        let s = base(&mut r);
        auto.push((
            add("orig", s.source()),
            add("copy", perturb_layout(&s.source(), &mut r)),
        ));
    }
    for _ in 0..3 {
        let s = base(&mut r);
        auto.push((
            add("orig", s.source()),
            add("copy", s.render(&s.random_naming(&mut r))),
        ));
    }
    let mut known = Vec::new();
    for _ in 0..2 {
        let (x, y) = (base(&mut r), base(&mut r));
        known.push((add("orig", x.source()), add("other", y.source())));
    }
    let mut manual = Vec::new();
    for i in 0..4 {
        let s = base(&mut r);
        manual.push((
            add("orig", s.source()),
            add("copy", s.with_extra_statement(i).source()),
        ));
    }
    let ring: Vec<Span> = (0..8).map(|_| add("ring", base(&mut r).source())).collect();
    for i in 0..8 {
        manual.push((ring[i].clone(), ring[(i + 1) % 8].clone()));
    }
    let manual_truth: Vec<bool> = (0..12).map(|i| i < 9).collect();

    let pairs = dir.path().join("pairs.csv");
    let all: Vec<(Span, Span)> = auto.iter().chain(&known).chain(&manual).cloned().collect();
    write(&pairs, &all, |_| String::new());
    let seed = dir.path().join("seed.csv");
    write(&seed, &known, |i| {
        if i == 0 {
            ",true,,".into()
        } else {
            ",false,,".into()
        }
    });
    let kb = dir.path().join("kb.sqlite");
    KnowledgeStore::open(&kb)
        .and_then(|s| s.import_seed(fs::File::open(&seed).unwrap()))
        .map_err(|e| e.to_string())?;

    let labels = dir.path().join("labels.csv");
    let mut rows = String::new();
    for ((a, b), truth) in manual.iter().zip(&manual_truth) {
        for judge in 0..3 {
            let v = if judge == 2 { !truth } else { *truth };
            rows.push_str(&format!("{},{v},judge{judge}\n", pair_row(a, b)));
        }
    }
    fs::write(&labels, rows).unwrap();

    let inputs = Inputs::load(&root, Some(&kb), None).map_err(|e| e.to_string())?;
    let cfg = StudyConfig {
        sample_target: 20,
        ..StudyConfig::default()
    };
    let out = cmd_study(&pairs, Some(&labels), &inputs, &cfg).map_err(|e| e.to_string())?;
    let rep = &out.report;
    let c = &rep.auto_counts;
    let counts = (
        rep.sample_size,
        c.type1,
        c.type2,
        c.type3,
        c.known_true,
        c.known_false,
        rep.manual_count,
    );
    ensure(counts == (20, 3, 3, 0, 1, 1, 12), || {
        format!("counts {counts:?}")
    })?;
    let true_positives = 3 + 3 + 1 + manual_truth.iter().filter(|t| **t).count();
    let (precision, effort) = (true_positives as f64 / 20.0, 8.0 / 20.0);
    ensure(rep.precision == precision, || {
        format!("precision {} vs {precision}", rep.precision)
    })?;
    ensure(rep.effort_reduction == effort, || {
        format!("effort {} vs {effort}", rep.effort_reduction)
    })?;
    ensure(rep.effort_reduction == 0.4, || "effort not 0.4".into())?;
    Ok(format!(
        "20-pair sample, 8 auto, 12 manual, precision {precision}, effort reduction {effort}"
    ))
}

fn classifier_properties() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("corpus");
    let mut b = CorpusBuilder::new(&root);
    let mut r = rng(606);
    let mut reported = Vec::new();
    for id in 0..80 {
        let s = Skeleton::random(id, &mut r);
        let base = b.add("base", &s.source()).unwrap();
        let grown = b
            .add("grown", &s.with_extra_statement(id % 5).source())
            .unwrap();
        b.add("decoy", &s.decoy(format!("decoy{id}")).source())
            .unwrap();
        reported.push((base, grown));
    }
    let tool_a = dir.path().join("a.csv");
    let tool_b = dir.path().join("b.csv");
    write(&tool_a, &reported, |_| String::new());
    let mut flipped: Vec<(Span, Span)> = reported
        .iter()
        .map(|(x, y)| (y.clone(), x.clone()))
        .collect();
    flipped.reverse();
    write(&tool_b, &flipped, |_| String::new());
    let tools = [tool_a, tool_b];
    let curated = cmd_curate(&CurateArgs {
        corpus: &root,
        tools: &tools,
        union: &[],
        theta: 0.9,
        min_tokens: 50,
        seed: 7,
    })
    .map_err(|e| e.to_string())?;
    let data = dir.path().join("train.csv");
    fs::write(&data, curated.set.to_csv_bytes()).unwrap();
    let hp = Hyperparams {
        seed: 11,
        ..Hyperparams::default()
    };
    let m1 = cmd_train(&data, &dir.path().join("m1.json"), &hp).map_err(|e| e.to_string())?;
    let m2 = cmd_train(&data, &dir.path().join("m2.json"), &hp).map_err(|e| e.to_string())?;
    ensure(m1.digest() == m2.digest(), || "digests differ".into())?;
    let reloaded = ClassifierModel::load(&dir.path().join("m1.json")).map_err(|e| e.to_string())?;
    ensure(reloaded.digest() == m1.digest(), || {
        "reloaded digest differs".into()
    })?;

    let held = &m1.header.held_out;
    let precision = held.precision.unwrap_or(0.0);
    ensure(precision >= 0.95, || {
        format!("held-out precision {precision:.3} on {} rows", held.rows)
    })?;

    let index = CorpusIndex::ingest(&root).map_err(|e| e.to_string())?;
    let methods: Vec<&MethodRecord> = index.methods().collect();
    let metrics: HashMap<Endpoint, _> = clonejudge_core::analysis::analyze_corpus(&index)
        .into_iter()
        .filter_map(|(k, f)| f.parsed.ok().map(|p| (k, p.metrics)))
        .collect();
    let mut swaps = 0;
    for _ in 0..300 {
        let (x, y) = (
            methods[r.random_range(0..methods.len())].endpoint(),
            methods[r.random_range(0..methods.len())].endpoint(),
        );
        let ab = m1
            .predict(&featurize((&x, &metrics[&x]), (&y, &metrics[&y])))
            .map_err(|e| e.to_string())?;
        let ba = m1
            .predict(&featurize((&y, &metrics[&y]), (&x, &metrics[&x])))
            .map_err(|e| e.to_string())?;
        ensure(ab.to_bits() == ba.to_bits(), || {
            format!("predict({x}, {y}) = {ab} but swapped {ba}")
        })?;
        swaps += 1;
    }
    Ok(format!(
        "{}+{} curated rows, digest {}, held-out precision {precision:.3} on {} rows, {swaps} swaps exact",
        curated.set.positives(),
        curated.set.negatives(),
        &m1.digest()[..12],
        held.rows
    ))
}

fn trust_cutoff() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("corpus");
    let mut b = CorpusBuilder::new(&root);
    let mut r = rng(707);
    let spans: Vec<Span> = (0..4)
        .map(|i| b.add("src", &Skeleton::random(i, &mut r).source()).unwrap())
        .collect();
    let rows = vec![
        (spans[0].clone(), spans[1].clone()),
        (spans[2].clone(), spans[3].clone()),
    ];
    let pairs = dir.path().join("pairs.csv");
    write(&pairs, &rows, |_| String::new());
    let seed = dir.path().join("seed.csv");
    write(&seed, &rows, |i| {
        if i == 0 {
            ",true,T3,0.69".into()
        } else {
            ",true,T3,0.70".into()
        }
    });
    let kb = dir.path().join("kb.sqlite");
    KnowledgeStore::open(&kb)
        .and_then(|s| s.import_seed(fs::File::open(&seed).unwrap()))
        .map_err(|e| e.to_string())?;
    let inputs = Inputs::load(&root, Some(&kb), None).map_err(|e| e.to_string())?;
    let out =
        cmd_resolve(&pairs, &inputs, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let status = |s: &Span| {
        out.outcomes
            .iter()
            .find(|(k, _)| k.first().file == s.file || k.second().file == s.file)
            .map(|(_, o)| o.status)
    };
    let (low, high) = (status(&spans[0]), status(&spans[2]));
    ensure(low == Some(Status::Manual), || {
        format!("0.69 label gave {low:?}")
    })?;
    ensure(high == Some(Status::KnownTrue), || {
        format!("0.70 label gave {high:?}")
    })?;
    Ok("similarity 0.69 ignored, 0.70 consumed".into())
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("type-1 algorithm", type1_variants),
        ("type-2 algorithm", type2_algorithm),
        ("action filter math", action_math),
        ("sample sizes", sample_sizes),
        ("vote aggregation and finalization", votes_and_finalization),
        ("pipeline gate safety", gate_safety),
        ("end-to-end desk study", desk_study),
        ("classifier properties", classifier_properties),
        ("knowledge trust cutoff", trust_cutoff),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
