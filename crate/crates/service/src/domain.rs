//! Study orchestration: users, tools, experiments, judge tasks and reports.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};

use clonejudge_core::analysis::MethodFacts;
use clonejudge_core::classifier::Classifier;
use clonejudge_core::corpus::{CorpusIndex, MethodRecord};
use clonejudge_core::key::{Endpoint, PairKey};
use clonejudge_core::knowledge::{KnowledgeError, KnowledgeStore};
use clonejudge_core::outcome::{LabelType, ResolutionOutcome, Status};
use clonejudge_core::pairs_csv::{read_pairs, CsvError};
use clonejudge_core::pipeline::LocatedPair;
use clonejudge_core::stats::{aggregate_votes, compute_precision_report, SamplePlan, Verdict};
use clonejudge_core::study::{run_study, StudyConfig, StudyError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type UserId = u64;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("missing or invalid bearer token")]
    Unauthorized,
    #[error("not permitted")]
    Forbidden,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("user {0} is not registered")]
    UnregisteredUser(UserId),
    #[error("unknown tool {0}")]
    UnknownTool(u64),
    #[error("tool `{name}` {version} is already registered by this user")]
    DuplicateTool { name: String, version: String },
    #[error("experiment {0} not found")]
    ExperimentNotFound(u64),
    #[error("task {0} not found")]
    TaskNotFound(u64),
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("no pairs left after the size filter")]
    EmptyAfterFilter,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("experiment {0} is complete")]
    ExperimentComplete(u64),
    #[error("experiment not complete: {done} of {total} tasks done")]
    NotComplete { done: usize, total: usize },
    #[error("clone type {0} cannot be chosen by judges")]
    IllegalCloneType(LabelType),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<KnowledgeError> for ServiceError {
    fn from(e: KnowledgeError) -> Self {
        match e {
            KnowledgeError::IllegalCloneType(t) => ServiceError::IllegalCloneType(t),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub name: String,
    pub email: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registration {
    pub user: User,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tool {
    pub id: u64,
    pub name: String,
    pub version: String,
    pub description: String,
    pub owner: UserId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentState {
    Created,
    Sampling,
    Judging,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodView {
    pub folder: String,
    pub file: String,
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub source: String,
}

impl From<&MethodRecord> for MethodView {
    fn from(r: &MethodRecord) -> Self {
        Self {
            folder: r.folder.clone(),
            file: r.file.clone(),
            name: r.name.clone(),
            start_line: r.start_line,
            end_line: r.end_line,
            source: r.source.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPair {
    pub key: PairKey,
    pub outcome: ResolutionOutcome,
    /// Absent when the reported span could not be located in the corpus.
    pub left: Option<MethodView>,
    pub right: Option<MethodView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Experiment {
    pub id: u64,
    pub tool_id: u64,
    pub name: String,
    pub owner: UserId,
    pub uploaded_pair_count: usize,
    pub filtered_pair_count: usize,
    pub duplicate_count: usize,
    pub config: StudyConfig,
    pub plan: SamplePlan,
    pub state: ExperimentState,
    pub kb_snapshot_id: String,
    pub judges: BTreeSet<UserId>,
    pub sample: Vec<SampledPair>,
    #[serde(skip)]
    report: Option<Arc<Vec<u8>>>,
}

impl Experiment {
    pub fn manual_keys(&self) -> impl Iterator<Item = &PairKey> {
        self.sample
            .iter()
            .filter(|p| p.outcome.status == Status::Manual)
            .map(|p| &p.key)
    }

    pub fn has_report(&self) -> bool {
        self.report.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentView {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub manual_pair_count: usize,
    pub progress: Progress,
    pub has_report: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskVote {
    pub is_clone: bool,
    pub clone_type: Option<LabelType>,
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: u64,
    pub experiment_id: u64,
    pub judge_id: UserId,
    pub key: PairKey,
    pub status: TaskStatus,
    pub vote: Option<TaskVote>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskView {
    #[serde(flatten)]
    pub task: Task,
    pub pair: SampledPair,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Judgment {
    pub is_clone: bool,
    #[serde(default)]
    pub clone_type: Option<LabelType>,
    #[serde(default)]
    pub comment: Option<String>,
}

#[derive(Default)]
struct State {
    users: BTreeMap<UserId, User>,
    tokens: HashMap<String, UserId>,
    tools: BTreeMap<u64, Tool>,
    experiments: BTreeMap<u64, Experiment>,
    tasks: BTreeMap<u64, Task>,
    last_id: u64,
    snapshots: u64,
}

impl State {
    fn next_id(&mut self) -> u64 {
        self.last_id += 1;
        self.last_id
    }

    fn progress(&self, experiment_id: u64) -> Progress {
        let tasks = self
            .tasks
            .values()
            .filter(|t| t.experiment_id == experiment_id);
        let (mut done, mut total) = (0, 0);
        for t in tasks {
            total += 1;
            done += usize::from(t.status == TaskStatus::Done);
        }
        Progress { done, total }
    }

    fn view(&self, e: &Experiment) -> ExperimentView {
        ExperimentView {
            manual_pair_count: e.manual_keys().count(),
            progress: self.progress(e.id),
            has_report: e.has_report(),
            experiment: e.clone(),
        }
    }
}

fn judge_key(id: UserId) -> String {
    format!("user-{id}")
}

pub struct StudyService {
    corpus: CorpusIndex,
    facts: Mutex<HashMap<Endpoint, MethodFacts>>,
    store: KnowledgeStore,
    model: Option<Arc<dyn Classifier>>,
    defaults: StudyConfig,
    state: Mutex<State>,
}

impl StudyService {
    pub fn new(
        corpus: CorpusIndex,
        store: KnowledgeStore,
        model: Option<Arc<dyn Classifier>>,
        defaults: StudyConfig,
    ) -> Self {
        Self {
            corpus,
            facts: Mutex::new(HashMap::new()),
            store,
            model,
            defaults,
            state: Mutex::new(State::default()),
        }
    }

    pub fn defaults(&self) -> &StudyConfig {
        &self.defaults
    }

    pub fn store(&self) -> &KnowledgeStore {
        &self.store
    }

    fn state(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn register_user(&self, name: &str, email: &str) -> Result<Registration, ServiceError> {
        if name.trim().is_empty() || !email.contains('@') {
            return Err(ServiceError::InvalidRequest(
                "a name and an email address are required".into(),
            ));
        }
        let mut st = self.state();
        let id = st.next_id();
        self.store.register_judge(&judge_key(id))?;
        let user = User {
            id,
            name: name.trim().into(),
            email: email.trim().into(),
        };
        let token = uuid::Uuid::new_v4().simple().to_string();
        st.users.insert(id, user.clone());
        st.tokens.insert(token.clone(), id);
        Ok(Registration { user, token })
    }

    pub fn authenticate(&self, token: &str) -> Result<UserId, ServiceError> {
        self.state()
            .tokens
            .get(token)
            .copied()
            .ok_or(ServiceError::Unauthorized)
    }

    pub fn register_tool(
        &self,
        owner: UserId,
        name: &str,
        version: &str,
        description: &str,
    ) -> Result<Tool, ServiceError> {
        if name.trim().is_empty() || version.trim().is_empty() {
            return Err(ServiceError::InvalidRequest(
                "tool name and version are required".into(),
            ));
        }
        let mut st = self.state();
        if st
            .tools
            .values()
            .any(|t| t.owner == owner && t.name == name && t.version == version)
        {
            return Err(ServiceError::DuplicateTool {
                name: name.into(),
                version: version.into(),
            });
        }
        let id = st.next_id();
        let tool = Tool {
            id,
            name: name.into(),
            version: version.into(),
            description: description.into(),
            owner,
        };
        st.tools.insert(id, tool.clone());
        Ok(tool)
    }

    /// Parses the upload, samples it, resolves the sample against a
    /// knowledge-base snapshot and opens judging for the manual pairs.
    pub fn create_experiment(
        &self,
        owner: UserId,
        tool_id: u64,
        name: &str,
        csv: &[u8],
        config: Option<StudyConfig>,
    ) -> Result<ExperimentView, ServiceError> {
        if !self.state().tools.contains_key(&tool_id) {
            return Err(ServiceError::UnknownTool(tool_id));
        }
        let config = config.unwrap_or_else(|| self.defaults.clone());
        let reported = read_pairs(csv).map_err(|e| match e {
            CsvError::Malformed { line, message } => ServiceError::MalformedCsv { line, message },
            CsvError::Io(e) => ServiceError::Internal(e.to_string()),
        })?;
        let snapshot = self.store.snapshot()?;
        let study = {
            let mut facts = self.facts.lock().unwrap_or_else(|p| p.into_inner());
            run_study(
                &reported,
                &self.corpus,
                &mut facts,
                &snapshot,
                self.model.as_deref(),
                &config,
            )
        }
        .map_err(|e| match e {
            StudyError::EmptyAfterFilter => ServiceError::EmptyAfterFilter,
            StudyError::InvalidConfig(m) => ServiceError::InvalidConfig(m),
            StudyError::Stats(s) => ServiceError::InvalidConfig(s.to_string()),
        })?;

        let sample: Vec<SampledPair> = study
            .sample
            .iter()
            .zip(&study.outcomes)
            .map(|(p, (key, outcome))| {
                let (left, right) = match p {
                    LocatedPair::Found(c) => (
                        Some(MethodView::from(&c.left.record)),
                        Some(MethodView::from(&c.right.record)),
                    ),
                    LocatedPair::Missing { .. } => (None, None),
                };
                SampledPair {
                    key: key.clone(),
                    outcome: outcome.clone(),
                    left,
                    right,
                }
            })
            .collect();

        let mut st = self.state();
        st.snapshots += 1;
        let id = st.next_id();
        let mut exp = Experiment {
            id,
            tool_id,
            name: name.into(),
            owner,
            uploaded_pair_count: study.uploaded_pair_count,
            filtered_pair_count: study.filtered_pair_count,
            duplicate_count: study.duplicate_count,
            config,
            plan: study.plan,
            state: ExperimentState::Created,
            kb_snapshot_id: format!("kb-{}-{}", st.snapshots, snapshot.len()),
            judges: BTreeSet::new(),
            sample,
            report: None,
        };
        exp.state = ExperimentState::Sampling;
        if exp.manual_keys().next().is_none() {
            exp.report = Some(Arc::new(render_report(&exp, &BTreeMap::new())?));
            exp.state = ExperimentState::Complete;
        } else {
            exp.state = ExperimentState::Judging;
        }
        let view = st.view(&exp);
        st.experiments.insert(id, exp);
        Ok(view)
    }

    pub fn experiment(&self, id: u64) -> Result<ExperimentView, ServiceError> {
        let st = self.state();
        let e = st
            .experiments
            .get(&id)
            .ok_or(ServiceError::ExperimentNotFound(id))?;
        Ok(st.view(e))
    }

    /// Adds judges and materializes one task per judge and manual pair.
    /// Inviting a judge twice creates no new tasks.
    pub fn invite_judges(
        &self,
        caller: UserId,
        id: u64,
        judges: &[UserId],
    ) -> Result<ExperimentView, ServiceError> {
        let mut st = self.state();
        let e = st
            .experiments
            .get(&id)
            .ok_or(ServiceError::ExperimentNotFound(id))?;
        if e.owner != caller {
            return Err(ServiceError::Forbidden);
        }
        if e.state == ExperimentState::Complete {
            return Err(ServiceError::ExperimentComplete(id));
        }
        if let Some(u) = judges.iter().find(|u| !st.users.contains_key(u)) {
            return Err(ServiceError::UnregisteredUser(*u));
        }
        let mut keys: Vec<PairKey> = e.manual_keys().cloned().collect();
        keys.sort();
        let fresh: Vec<UserId> = judges
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|j| !e.judges.contains(j))
            .collect();
        for &judge in &fresh {
            for key in &keys {
                let tid = st.next_id();
                st.tasks.insert(
                    tid,
                    Task {
                        id: tid,
                        experiment_id: id,
                        judge_id: judge,
                        key: key.clone(),
                        status: TaskStatus::Pending,
                        vote: None,
                    },
                );
            }
        }
        let e = st.experiments.get_mut(&id).expect("checked above");
        e.judges.extend(fresh);
        let e = e.clone();
        Ok(st.view(&e))
    }

    /// A judge's tasks across experiments, in pair-key order.
    pub fn judge_tasks(&self, caller: UserId, judge: UserId) -> Result<Vec<Task>, ServiceError> {
        if caller != judge {
            return Err(ServiceError::Forbidden);
        }
        let st = self.state();
        if !st.users.contains_key(&judge) {
            return Err(ServiceError::UnregisteredUser(judge));
        }
        let mut tasks: Vec<Task> = st
            .tasks
            .values()
            .filter(|t| t.judge_id == judge)
            .cloned()
            .collect();
        tasks.sort_by(|a, b| (&a.key, a.experiment_id).cmp(&(&b.key, b.experiment_id)));
        Ok(tasks)
    }

    pub fn task(&self, caller: UserId, id: u64) -> Result<TaskView, ServiceError> {
        let st = self.state();
        let task = st.tasks.get(&id).ok_or(ServiceError::TaskNotFound(id))?;
        if task.judge_id != caller {
            return Err(ServiceError::Forbidden);
        }
        let pair = st.experiments[&task.experiment_id]
            .sample
            .iter()
            .find(|p| p.key == task.key)
            .cloned()
            .expect("tasks reference sampled pairs");
        Ok(TaskView {
            task: task.clone(),
            pair,
        })
    }

    /// Records a vote. Resubmitting replaces the judge's earlier vote. The
    /// experiment completes once every task is done.
    pub fn submit_judgment(
        &self,
        caller: UserId,
        task_id: u64,
        j: &Judgment,
    ) -> Result<Task, ServiceError> {
        if j.clone_type == Some(LabelType::T1) {
            return Err(ServiceError::IllegalCloneType(LabelType::T1));
        }
        let mut st = self.state();
        let task = st
            .tasks
            .get(&task_id)
            .ok_or(ServiceError::TaskNotFound(task_id))?;
        if task.judge_id != caller {
            return Err(ServiceError::Forbidden);
        }
        let exp_id = task.experiment_id;
        if st.experiments[&exp_id].state == ExperimentState::Complete {
            return Err(ServiceError::ExperimentComplete(exp_id));
        }
        self.store.record_judgment(
            &task.key,
            &judge_key(caller),
            j.is_clone,
            j.clone_type,
            j.comment.as_deref(),
        )?;
        let task = st.tasks.get_mut(&task_id).expect("checked above");
        task.status = TaskStatus::Done;
        task.vote = Some(TaskVote {
            is_clone: j.is_clone,
            clone_type: j.clone_type,
            comment: j.comment.clone(),
        });
        let task = task.clone();

        let progress = st.progress(exp_id);
        if progress.done == progress.total {
            let mut votes: BTreeMap<PairKey, Vec<bool>> = BTreeMap::new();
            for t in st.tasks.values().filter(|t| t.experiment_id == exp_id) {
                let v = t.vote.as_ref().expect("done tasks carry a vote");
                votes.entry(t.key.clone()).or_default().push(v.is_clone);
            }
            let verdicts: BTreeMap<PairKey, Verdict> = votes
                .into_iter()
                .map(|(k, v)| aggregate_votes(&v).map(|verdict| (k, verdict)))
                .collect::<Result<_, _>>()
                .map_err(|e| ServiceError::Internal(e.to_string()))?;
            let exp = st.experiments.get_mut(&exp_id).expect("task's experiment");
            exp.report = Some(Arc::new(render_report(exp, &verdicts)?));
            exp.state = ExperimentState::Complete;
        }
        Ok(task)
    }

    /// The frozen report bytes of a complete experiment.
    pub fn report(&self, id: u64) -> Result<Arc<Vec<u8>>, ServiceError> {
        let st = self.state();
        let e = st
            .experiments
            .get(&id)
            .ok_or(ServiceError::ExperimentNotFound(id))?;
        match &e.report {
            Some(r) => Ok(r.clone()),
            None => {
                let p = st.progress(id);
                Err(ServiceError::NotComplete {
                    done: p.done,
                    total: p.total,
                })
            }
        }
    }

    pub fn export_labels(&self) -> Result<Vec<u8>, ServiceError> {
        let mut buf = Vec::new();
        self.store.export_labels(&mut buf)?;
        Ok(buf)
    }
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    experiment_id: u64,
    tool_id: u64,
    name: &'a str,
    kb_snapshot_id: &'a str,
    #[serde(flatten)]
    report: clonejudge_core::stats::PrecisionReport,
}

fn render_report(
    e: &Experiment,
    verdicts: &BTreeMap<PairKey, Verdict>,
) -> Result<Vec<u8>, ServiceError> {
    let outcomes: Vec<(PairKey, ResolutionOutcome)> = e
        .sample
        .iter()
        .map(|p| (p.key.clone(), p.outcome.clone()))
        .collect();
    let mut report = compute_precision_report(&outcomes, verdicts)
        .map_err(|e| ServiceError::Internal(e.to_string()))?;
    report.plan = Some(e.plan.clone());
    let doc = ReportDocument {
        experiment_id: e.id,
        tool_id: e.tool_id,
        name: &e.name,
        kb_snapshot_id: &e.kb_snapshot_id,
        report,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&doc).map_err(|e| ServiceError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}
