use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clonejudge_testkit::{pair_row, perturb_layout, rng, CorpusBuilder, Skeleton, Span};
use rand::Rng;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clonejudge"))
        .args(args)
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct SixPairs {
    dir: tempfile::TempDir,
    rows: Vec<(Span, Span)>,
}

/// Two Type I variants, one Type II rename and three dissimilar pairs.
fn six_pairs() -> SixPairs {
    let dir = tempfile::tempdir().unwrap();
    let mut b = CorpusBuilder::new(dir.path().join("corpus"));
    let mut r = rng(21);
    let bases: Vec<Skeleton> = (0..6).map(|i| Skeleton::random(i, &mut r)).collect();
    let s: Vec<Span> = bases
        .iter()
        .map(|k| b.add("src", &k.source()).unwrap())
        .collect();
    let t1a = b
        .add("copy", &perturb_layout(&bases[0].source(), &mut r))
        .unwrap();
    let t1b = b
        .add("copy", &perturb_layout(&bases[1].source(), &mut r))
        .unwrap();
    let t2 = b
        .add("copy", &bases[2].render(&bases[2].random_naming(&mut r)))
        .unwrap();
    let rows = vec![
        (s[0].clone(), t1a),
        (s[1].clone(), t1b),
        (s[2].clone(), t2),
        (s[3].clone(), s[4].clone()),
        (s[4].clone(), s[5].clone()),
        (s[3].clone(), s[5].clone()),
    ];
    let csv: String = rows.iter().map(|(a, b)| pair_row(a, b) + "\n").collect();
    fs::write(dir.path().join("pairs.csv"), csv).unwrap();
    SixPairs { dir, rows }
}

#[test]
fn ingest_examples() {
    let empty = tempfile::tempdir().unwrap();
    let out = empty.path().join("index.json");
    let o = bin(&["ingest", "--corpus", p(empty.path()), "--out", p(&out)]);
    assert!(o.status.success());
    assert!(text(&o.stderr).contains("warning"));

    let dir = tempfile::tempdir().unwrap();
    let mut b = CorpusBuilder::new(dir.path());
    let mut r = rng(1);
    let a = b.add("pkg", &Skeleton::random(0, &mut r).source()).unwrap();
    let c = b.add("pkg", &Skeleton::random(1, &mut r).source()).unwrap();
    let idx = dir.path().join("index.json");
    let o = bin(&[
        "ingest",
        "--corpus",
        p(dir.path()),
        "--out",
        p(&idx),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        (v["files"].as_u64(), v["methods"].as_u64()),
        (Some(2), Some(2))
    );
    let saved = clonejudge_core::corpus::CorpusIndex::load(&idx).unwrap();
    let mut spans: Vec<(String, usize, usize)> = saved
        .methods()
        .map(|m| (m.file.clone(), m.start_line, m.end_line))
        .collect();
    spans.sort();
    assert_eq!(
        spans,
        vec![
            (a.file, a.start_line, a.end_line),
            (c.file, c.start_line, c.end_line)
        ]
    );

    let o = bin(&[
        "ingest",
        "--corpus",
        "/definitely/not/here",
        "--out",
        p(&idx),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn resolve_examples() {
    let f = six_pairs();
    let corpus = f.dir.path().join("corpus");
    let pairs = f.dir.path().join("pairs.csv");
    let missing_model = f.dir.path().join("nope.json");
    let args = [
        "resolve",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--model",
        p(&missing_model),
    ];
    let o1 = bin(&args);
    assert!(o1.status.success(), "{}", text(&o1.stderr));
    assert!(text(&o1.stderr).contains("warning: model"));
    let listing = text(&o1.stdout);
    let count = |s: &str| {
        listing
            .lines()
            .filter(|l| l.contains(&format!(",{s},")))
            .count()
    };
    assert_eq!(
        (count("auto_type1"), count("auto_type2"), count("manual")),
        (2, 1, 3)
    );
    assert!(listing.starts_with(
        "folder_name_1,file_name_1,start_line_1,end_line_1,folder_name_2,file_name_2,start_line_2,end_line_2,status,clone_type,provenance,reason"
    ));
    let o2 = bin(&args);
    assert_eq!(o1.stdout, o2.stdout);

    let o = bin(&[
        "resolve",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["summary"]["auto_counts"]["type1"], 2);
    assert_eq!(v["summary"]["manual"], 3);

    let bad = f.dir.path().join("bad.csv");
    fs::write(
        &bad,
        format!(
            "{}\n{}\nx,y,1,2,z,w,3\n",
            pair_row(&f.rows[0].0, &f.rows[0].1),
            pair_row(&f.rows[1].0, &f.rows[1].1)
        ),
    )
    .unwrap();
    let o = bin(&["resolve", p(&bad), "--corpus", p(&corpus)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("line 3"), "{}", text(&o.stderr));

    let o = bin(&[
        "resolve",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--theta-t3",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn study_examples() {
    let f = six_pairs();
    let corpus = f.dir.path().join("corpus");
    let auto = f.dir.path().join("auto.csv");
    fs::write(
        &auto,
        f.rows[..3]
            .iter()
            .map(|(a, b)| pair_row(a, b) + "\n")
            .collect::<String>(),
    )
    .unwrap();
    let o = bin(&[
        "study",
        p(&auto),
        "--corpus",
        p(&corpus),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        (v["sample_size"].as_u64(), v["effort_reduction"].as_f64()),
        (Some(3), Some(1.0))
    );

    let pairs = f.dir.path().join("pairs.csv");
    let labels = f.dir.path().join("labels.csv");
    let label_rows: String = f.rows[3..5]
        .iter()
        .map(|(a, b)| format!("{},true\n", pair_row(a, b)))
        .collect();
    fs::write(&labels, label_rows).unwrap();
    let o = bin(&[
        "study",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--labels",
        p(&labels),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = text(&o.stderr);
    let (a, b) = &f.rows[5];
    assert!(err.contains("1 manual pair(s) have no verdict"), "{err}");
    assert!(
        err.contains(&format!(
            "{}/{}:{}-{}",
            a.folder, a.file, a.start_line, a.end_line
        )),
        "{err}"
    );
    assert!(
        err.contains(&format!(
            "{}/{}:{}-{}",
            b.folder, b.file, b.start_line, b.end_line
        )),
        "{err}"
    );

    fs::write(
        &labels,
        f.rows[3..]
            .iter()
            .map(|(a, b)| format!("{},false\n", pair_row(a, b)))
            .collect::<String>(),
    )
    .unwrap();
    let out = f.dir.path().join("out");
    let o = bin(&[
        "study",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--labels",
        p(&labels),
        "--out-dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("Precision"));
    let report: Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(
        (report["tp"].as_u64(), report["fp"].as_u64()),
        (Some(3), Some(3))
    );
    assert!(out.join("report.txt").exists() && out.join("outcomes.csv").exists());
}

#[test]
fn curate_and_train_examples() {
    let f = six_pairs();
    let corpus = f.dir.path().join("corpus");
    let pairs = f.dir.path().join("pairs.csv");
    let out = f.dir.path().join("train.csv");
    let o = bin(&[
        "curate",
        "--corpus",
        p(&corpus),
        "--tool",
        p(&pairs),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        text(&o.stderr).contains("at least two --tool lists"),
        "{}",
        text(&o.stderr)
    );

    let mut r = rng(9);
    let mut rows = Vec::new();
    for i in 0..40 {
        let clone = i % 2 == 0;
        let mut v: Vec<f64> = (0..48).map(|_| r.random_range(0.0..1.0)).collect();
        if clone {
            v[0] += 3.0;
        }
        rows.push(format!(
            "{},{},{}",
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
            if clone { "clone" } else { "non_clone" },
            "manual"
        ));
    }
    let names = clonejudge_core::classifier::feature_names().join(",");
    fs::write(
        &out,
        format!("{names},label,provenance\n{}\n", rows.join("\n")),
    )
    .unwrap();
    let m1 = f.dir.path().join("m1.json");
    let m2 = f.dir.path().join("m2.json");
    let a = bin(&[
        "train",
        "--data",
        p(&out),
        "--out",
        p(&m1),
        "--seed",
        "3",
        "--format",
        "json",
    ]);
    let b = bin(&[
        "train",
        "--data",
        p(&out),
        "--out",
        p(&m2),
        "--seed",
        "3",
        "--format",
        "json",
    ]);
    assert!(a.status.success(), "{}", text(&a.stderr));
    let da: Value = serde_json::from_slice(&a.stdout).unwrap();
    let db: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(da["digest"], db["digest"]);
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let o = bin(&[
        "resolve",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--model",
        p(&m1),
    ]);
    assert!(o.status.success());
    let garbage = f.dir.path().join("garbage.json");
    fs::write(&garbage, "{}").unwrap();
    let o = bin(&[
        "resolve",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--model",
        p(&garbage),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn knowledge_base_round_trip() {
    let f = six_pairs();
    let corpus = f.dir.path().join("corpus");
    let pairs = f.dir.path().join("pairs.csv");
    let kb = f.dir.path().join("kb.sqlite");
    let seed = f.dir.path().join("seed.csv");
    let (a, b) = &f.rows[3];
    fs::write(
        &seed,
        format!(
            "{},false,,\n{},true,T3,0.5\n",
            pair_row(a, b),
            pair_row(&f.rows[4].0, &f.rows[4].1)
        ),
    )
    .unwrap();
    let o = bin(&["kb", "import", "--kb", p(&kb), p(&seed)]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).starts_with("2 labels imported"));
    let o = bin(&["kb", "export", "--kb", p(&kb)]);
    assert_eq!(text(&o.stdout).lines().count(), 3);

    let o = bin(&["resolve", p(&pairs), "--corpus", p(&corpus), "--kb", p(&kb)]);
    let listing = text(&o.stdout);
    assert_eq!(
        listing
            .lines()
            .filter(|l| l.contains(",known_false,"))
            .count(),
        1
    );
    assert_eq!(
        listing.lines().filter(|l| l.contains(",manual,")).count(),
        2
    );

    let o = bin(&[
        "resolve",
        p(&pairs),
        "--corpus",
        p(&corpus),
        "--kb",
        p(&f.dir.path().join("absent.sqlite")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
