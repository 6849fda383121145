//! Offline drivers behind the `clonejudge` binary.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clonejudge_core::analysis::{analyze_corpus, MethodFacts};
use clonejudge_core::classifier::{
    curate_training_set, train, ClassifierError, ClassifierModel, Curated, CurationInput,
    Hyperparams, TrainingSet,
};
use clonejudge_core::corpus::{CorpusError, CorpusIndex, Diagnostic};
use clonejudge_core::key::{Endpoint, PairKey};
use clonejudge_core::knowledge::{ImportSummary, KbSnapshot, KnowledgeError, KnowledgeStore};
use clonejudge_core::outcome::{ResolutionOutcome, Status};
use clonejudge_core::pairs_csv::{read_labels, read_pairs, CsvError, ReportedPair};
use clonejudge_core::pipeline::{intake, resolve_all, PipelineConfig};
use clonejudge_core::stats::{aggregate_votes, AutoCounts, PrecisionReport, StatsError, Verdict};
use clonejudge_core::study::{run_study, Study, StudyConfig, StudyError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("{} manual pair(s) have no verdict in the labels file:\n{}", .0.len(), list_keys(.0))]
    MissingVerdict(Vec<PairKey>),
    #[error("internal error: {0}")]
    Internal(String),
}

fn list_keys(keys: &[PairKey]) -> String {
    keys.iter()
        .map(|k| format!("  {k}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    /// 0 success, 1 bad input, 2 internal failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) | CliError::MissingVerdict(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

fn user(e: impl std::fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Malformed { line, message } => {
                CliError::User(format!("malformed CSV at line {line}: {message}"))
            }
            CsvError::Io(e) => CliError::User(e.to_string()),
        }
    }
}

impl From<KnowledgeError> for CliError {
    fn from(e: KnowledgeError) -> Self {
        match e {
            KnowledgeError::Storage(s) => CliError::Internal(s.to_string()),
            KnowledgeError::Csv(c) => c.into(),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::NonConvergence(_) => CliError::Internal(e.to_string()),
            ClassifierError::EmptyIntersection => CliError::User(format!(
                "{e}; curation needs at least two --tool lists that share pairs"
            )),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        user(e)
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        user(e)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| user(format!("{}: {e}", path.display())))
}

/// A corpus directory is ingested on the fly; a file is read as a saved index.
pub fn load_corpus(path: &Path) -> Result<CorpusIndex, CliError> {
    if path.is_dir() {
        Ok(CorpusIndex::ingest(path)?)
    } else if path.is_file() {
        Ok(CorpusIndex::load(path)?)
    } else {
        Err(user(format!(
            "corpus path {} does not exist",
            path.display()
        )))
    }
}

pub fn open_kb(path: &Path, create: bool) -> Result<KnowledgeStore, CliError> {
    if !create && !path.is_file() {
        return Err(user(format!(
            "knowledge base {} does not exist",
            path.display()
        )));
    }
    Ok(KnowledgeStore::open(path)?)
}

pub fn load_kb(path: Option<&Path>) -> Result<KbSnapshot, CliError> {
    match path {
        Some(p) => Ok(open_kb(p, false)?.snapshot()?),
        None => Ok(KbSnapshot::default()),
    }
}

/// Loads a model file. A missing file is not an error: Type III resolution
/// is skipped and a warning returned instead.
pub fn load_model(path: Option<&Path>) -> Result<(Option<ClassifierModel>, Vec<String>), CliError> {
    match path {
        None => Ok((None, Vec::new())),
        Some(p) if !p.exists() => Ok((
            None,
            vec![format!(
                "model {} not found; Type III pairs go to manual judgment",
                p.display()
            )],
        )),
        Some(p) => Ok((Some(ClassifierModel::load(p)?), Vec::new())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub files: usize,
    pub methods: usize,
    pub diagnostics: Vec<Diagnostic>,
    pub index_path: PathBuf,
    pub warnings: Vec<String>,
}

pub fn cmd_ingest(corpus_root: &Path, out: &Path) -> Result<IngestSummary, CliError> {
    if !corpus_root.is_dir() {
        return Err(user(format!(
            "{} is not a readable directory",
            corpus_root.display()
        )));
    }
    let index = CorpusIndex::ingest(corpus_root)?;
    let files = index.file_count();
    let methods = index.methods().count();
    let mut warnings = Vec::new();
    if files == 0 {
        warnings.push(format!("no .java files under {}", corpus_root.display()));
    } else if methods == 0 && index.diagnostics.len() >= files {
        return Err(user(format!("none of the {files} files could be parsed")));
    }
    index.save(out)?;
    Ok(IngestSummary {
        files,
        methods,
        diagnostics: index.diagnostics.clone(),
        index_path: out.to_path_buf(),
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolveSummary {
    pub uploaded: usize,
    pub too_small: usize,
    pub duplicates: usize,
    pub resolved: usize,
    pub auto_counts: AutoCounts,
    pub manual: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolveOutput {
    pub summary: ResolveSummary,
    pub outcomes: Vec<(PairKey, ResolutionOutcome)>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

pub fn tally(outcomes: &[(PairKey, ResolutionOutcome)]) -> (AutoCounts, usize) {
    let mut c = AutoCounts::default();
    let mut manual = 0;
    for (_, o) in outcomes {
        match o.status {
            Status::AutoType1 => c.type1 += 1,
            Status::AutoType2 => c.type2 += 1,
            Status::AutoType3 => c.type3 += 1,
            Status::KnownTrue => c.known_true += 1,
            Status::KnownFalse => c.known_false += 1,
            Status::Manual => manual += 1,
        }
    }
    (c, manual)
}

pub struct Inputs {
    pub corpus: CorpusIndex,
    pub kb: KbSnapshot,
    pub model: Option<ClassifierModel>,
    pub warnings: Vec<String>,
}

impl Inputs {
    pub fn load(corpus: &Path, kb: Option<&Path>, model: Option<&Path>) -> Result<Self, CliError> {
        let corpus = load_corpus(corpus)?;
        let kb = load_kb(kb)?;
        let (model, warnings) = load_model(model)?;
        Ok(Self {
            corpus,
            kb,
            model,
            warnings,
        })
    }

    fn classifier(&self) -> Option<&dyn clonejudge_core::classifier::Classifier> {
        self.model
            .as_ref()
            .map(|m| m as &dyn clonejudge_core::classifier::Classifier)
    }
}

pub fn read_pairs_file(path: &Path) -> Result<Vec<ReportedPair>, CliError> {
    let bytes = read_file(path)?;
    read_pairs(bytes.as_slice()).map_err(|e| match e {
        CsvError::Malformed { line, message } => user(format!(
            "{}: malformed CSV at line {line}: {message}",
            path.display()
        )),
        other => other.into(),
    })
}

/// Resolves every uploaded pair that passes the size filter.
pub fn cmd_resolve(
    pairs: &Path,
    inputs: &Inputs,
    cfg: &PipelineConfig,
) -> Result<ResolveOutput, CliError> {
    cfg.validate().map_err(user)?;
    let reported = read_pairs_file(pairs)?;
    let mut facts = HashMap::new();
    let taken = intake(&reported, &inputs.corpus, &mut facts, cfg);
    let mut located = taken.pairs;
    located.sort_by(|a, b| a.key().cmp(b.key()));
    let outcomes = resolve_all(&located, &inputs.kb, inputs.classifier(), cfg);
    let (auto_counts, manual) = tally(&outcomes);
    Ok(ResolveOutput {
        summary: ResolveSummary {
            uploaded: reported.len(),
            too_small: taken.too_small,
            duplicates: taken.duplicates,
            resolved: outcomes.len(),
            auto_counts,
            manual,
        },
        outcomes,
        warnings: inputs.warnings.clone(),
    })
}

/// Maps each reported endpoint onto the corpus method it matches, keeping
/// the reported span when nothing matches.
fn located_key(corpus: &CorpusIndex, left: &Endpoint, right: &Endpoint) -> PairKey {
    let fix = |ep: &Endpoint| {
        corpus
            .locate(ep)
            .map(|m| m.endpoint())
            .unwrap_or_else(|_| ep.clone())
    };
    PairKey::new(fix(left), fix(right))
}

/// Majority verdict per pair from a labels file.
pub fn read_verdicts(
    path: &Path,
    corpus: &CorpusIndex,
) -> Result<BTreeMap<PairKey, Verdict>, CliError> {
    let rows = read_labels(read_file(path)?.as_slice())?;
    let mut votes: BTreeMap<PairKey, Vec<bool>> = BTreeMap::new();
    for r in rows {
        votes
            .entry(located_key(corpus, &r.left, &r.right))
            .or_default()
            .push(r.is_clone);
    }
    votes
        .into_iter()
        .map(|(k, v)| {
            Ok((
                k,
                aggregate_votes(&v).map_err(|e| CliError::Internal(e.to_string()))?,
            ))
        })
        .collect()
}

pub struct StudyOutput {
    pub study: Study,
    pub report: PrecisionReport,
    pub warnings: Vec<String>,
}

pub fn cmd_study(
    pairs: &Path,
    labels: Option<&Path>,
    inputs: &Inputs,
    cfg: &StudyConfig,
) -> Result<StudyOutput, CliError> {
    let reported = read_pairs_file(pairs)?;
    let verdicts = match labels {
        Some(p) => read_verdicts(p, &inputs.corpus)?,
        None => BTreeMap::new(),
    };
    let mut facts = HashMap::new();
    let study = run_study(
        &reported,
        &inputs.corpus,
        &mut facts,
        &inputs.kb,
        inputs.classifier(),
        cfg,
    )?;
    let report = study.report(&verdicts).map_err(|e| match e {
        StatsError::IncompleteExperiment { missing } => CliError::MissingVerdict(missing),
        other => user(other),
    })?;
    Ok(StudyOutput {
        study,
        report,
        warnings: inputs.warnings.clone(),
    })
}

pub struct CurateArgs<'a> {
    pub corpus: &'a Path,
    pub tools: &'a [PathBuf],
    pub union: &'a [PathBuf],
    pub theta: f64,
    pub min_tokens: usize,
    pub seed: u64,
}

pub fn cmd_curate(args: &CurateArgs<'_>) -> Result<Curated, CliError> {
    if args.tools.len() < 2 {
        return Err(ClassifierError::EmptyIntersection.into());
    }
    let corpus = load_corpus(args.corpus)?;
    let read = |paths: &[PathBuf]| -> Result<Vec<Vec<PairKey>>, CliError> {
        paths
            .iter()
            .map(|p| {
                Ok(read_pairs_file(p)?
                    .iter()
                    .map(|r| located_key(&corpus, &r.left, &r.right))
                    .collect())
            })
            .collect()
    };
    let tool_outputs = read(args.tools)?;
    let union_outputs = read(args.union)?;
    let methods: HashMap<Endpoint, MethodFacts> = analyze_corpus(&corpus);
    Ok(curate_training_set(&CurationInput {
        tool_outputs: &tool_outputs,
        union_outputs: &union_outputs,
        methods: &methods,
        theta: args.theta,
        min_tokens: args.min_tokens,
        seed: args.seed,
    })?)
}

pub fn cmd_train(data: &Path, out: &Path, hp: &Hyperparams) -> Result<ClassifierModel, CliError> {
    let set = TrainingSet::read_csv(read_file(data)?.as_slice())?;
    let model = train(&set, hp)?;
    model.save(out)?;
    Ok(model)
}

pub fn cmd_kb_import(kb: &Path, seed: &Path) -> Result<ImportSummary, CliError> {
    let store = open_kb(kb, true)?;
    Ok(store.import_seed(read_file(seed)?.as_slice())?)
}

pub fn cmd_kb_export(kb: &Path) -> Result<Vec<u8>, CliError> {
    let store = open_kb(kb, false)?;
    let mut buf = Vec::new();
    store.export_labels(&mut buf)?;
    Ok(buf)
}

pub async fn cmd_serve(
    corpus: &Path,
    kb: &Path,
    model: Option<&Path>,
    bind: &str,
    defaults: StudyConfig,
) -> Result<(), CliError> {
    let corpus = load_corpus(corpus)?;
    let store = open_kb(kb, true)?;
    let (model, warnings) = load_model(model)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let model = model.map(|m| Arc::new(m) as Arc<dyn clonejudge_core::classifier::Classifier>);
    let service = Arc::new(clonejudge_service::StudyService::new(
        corpus, store, model, defaults,
    ));
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| user(format!("cannot bind {bind}: {e}")))?;
    eprintln!(
        "listening on {}",
        listener
            .local_addr()
            .map_err(|e| CliError::Internal(e.to_string()))?
    );
    axum::serve(listener, clonejudge_service::router(service))
        .await
        .map_err(|e| CliError::Internal(e.to_string()))
}
