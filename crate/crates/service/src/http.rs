//! JSON-over-HTTP surface of [`StudyService`].
//!
//! Mutating requests honour an `Idempotency-Key` header: a retried request
//! with the same key receives the first response verbatim.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clonejudge_core::study::StudyConfig;
use serde::Deserialize;
use serde_json::json;

use crate::domain::{Judgment, ServiceError, StudyService, UserId};

type Replies = Arc<Mutex<HashMap<String, (StatusCode, Vec<u8>)>>>;

#[derive(Clone)]
struct App {
    service: Arc<StudyService>,
    replies: Replies,
}

pub fn router(service: Arc<StudyService>) -> Router {
    let app = App {
        service,
        replies: Arc::default(),
    };
    Router::new()
        .route("/users", post(register_user))
        .route("/tools", post(register_tool))
        .route("/experiments", post(create_experiment))
        .route("/experiments/{id}", get(get_experiment))
        .route("/experiments/{id}/judges", post(invite_judges))
        .route("/experiments/{id}/report", get(get_report))
        .route("/judges/{id}/tasks", get(judge_tasks))
        .route("/tasks/{id}", get(get_task))
        .route("/tasks/{id}/judgment", post(submit_judgment))
        .route("/export/labels", get(export_labels))
        .with_state(app)
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            ServiceError::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized"),
            ServiceError::Forbidden => (StatusCode::FORBIDDEN, "forbidden"),
            ServiceError::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            ServiceError::UnregisteredUser(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "unregistered_user")
            }
            ServiceError::UnknownTool(_) => (StatusCode::NOT_FOUND, "unknown_tool"),
            ServiceError::DuplicateTool { .. } => (StatusCode::CONFLICT, "duplicate_tool"),
            ServiceError::ExperimentNotFound(_) => (StatusCode::NOT_FOUND, "experiment_not_found"),
            ServiceError::TaskNotFound(_) => (StatusCode::NOT_FOUND, "task_not_found"),
            ServiceError::MalformedCsv { .. } => (StatusCode::BAD_REQUEST, "malformed_csv"),
            ServiceError::EmptyAfterFilter => {
                (StatusCode::UNPROCESSABLE_ENTITY, "empty_after_filter")
            }
            ServiceError::InvalidConfig(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
            ServiceError::ExperimentComplete(_) => (StatusCode::CONFLICT, "experiment_complete"),
            ServiceError::NotComplete { .. } => (StatusCode::CONFLICT, "not_complete"),
            ServiceError::IllegalCloneType(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "illegal_clone_type")
            }
            ServiceError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let mut body = json!({ "error": code, "message": self.to_string() });
        match &self {
            ServiceError::MalformedCsv { line, .. } => body["line"] = json!(line),
            ServiceError::NotComplete { done, total } => {
                body["progress"] = json!({ "done": done, "total": total })
            }
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}

fn caller(app: &App, headers: &HeaderMap) -> Result<UserId, ServiceError> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or(ServiceError::Unauthorized)?;
    app.service.authenticate(token.trim())
}

fn json_reply<T: serde::Serialize>(status: StatusCode, value: &T) -> (StatusCode, Vec<u8>) {
    (
        status,
        serde_json::to_vec(value).expect("response serializes"),
    )
}

/// Runs `op` once per (caller, route, idempotency key).
fn idempotent(
    app: &App,
    headers: &HeaderMap,
    user: UserId,
    route: &str,
    op: impl FnOnce() -> Result<(StatusCode, Vec<u8>), ServiceError>,
) -> Response {
    let key = headers
        .get("idempotency-key")
        .and_then(|v| v.to_str().ok())
        .map(|k| format!("{user}|{route}|{k}"));
    if let Some(k) = &key {
        if let Some((status, body)) = app.replies.lock().unwrap_or_else(|p| p.into_inner()).get(k) {
            return raw(*status, body.clone());
        }
    }
    match op() {
        Ok((status, body)) => {
            if let Some(k) = key {
                app.replies
                    .lock()
                    .unwrap_or_else(|p| p.into_inner())
                    .insert(k, (status, body.clone()));
            }
            raw(status, body)
        }
        Err(e) => e.into_response(),
    }
}

fn raw(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

#[derive(Deserialize)]
struct NewUser {
    name: String,
    email: String,
}

async fn register_user(State(app): State<App>, Json(u): Json<NewUser>) -> Response {
    match app.service.register_user(&u.name, &u.email) {
        Ok(r) => (StatusCode::CREATED, Json(r)).into_response(),
        Err(e) => e.into_response(),
    }
}

#[derive(Deserialize)]
struct NewTool {
    name: String,
    version: String,
    #[serde(default)]
    description: String,
}

async fn register_tool(
    State(app): State<App>,
    headers: HeaderMap,
    Json(t): Json<NewTool>,
) -> Response {
    let user = match caller(&app, &headers) {
        Ok(u) => u,
        Err(e) => return e.into_response(),
    };
    idempotent(&app, &headers, user, "tools", || {
        let tool = app
            .service
            .register_tool(user, &t.name, &t.version, &t.description)?;
        Ok(json_reply(StatusCode::CREATED, &tool))
    })
}

#[derive(Deserialize, Default)]
struct UploadQuery {
    tool_id: Option<u64>,
    name: Option<String>,
    min_tokens: Option<usize>,
    theta_t3: Option<f64>,
    sample_target: Option<usize>,
    seed: Option<u64>,
    confidence: Option<f64>,
    margin: Option<f64>,
}

struct Upload {
    tool_id: Option<u64>,
    name: String,
    csv: Vec<u8>,
    config: StudyConfig,
}

fn apply_query(cfg: &mut StudyConfig, q: &UploadQuery) {
    if let Some(v) = q.min_tokens {
        cfg.pipeline.min_tokens = v;
    }
    if let Some(v) = q.theta_t3 {
        cfg.pipeline.theta_t3 = v;
    }
    if let Some(v) = q.sample_target {
        cfg.sample_target = v;
    }
    if let Some(v) = q.seed {
        cfg.seed = v;
    }
    if let Some(v) = q.confidence {
        cfg.confidence = v;
    }
    if let Some(v) = q.margin {
        cfg.margin = v;
    }
}

async fn read_upload(app: &App, q: &UploadQuery, req: Request) -> Result<Upload, ServiceError> {
    let bad = |m: String| ServiceError::InvalidRequest(m);
    let mut up = Upload {
        tool_id: q.tool_id,
        name: q.name.clone().unwrap_or_default(),
        csv: Vec::new(),
        config: app.service.defaults().clone(),
    };
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if is_multipart {
        let mut form = Multipart::from_request(req, &())
            .await
            .map_err(|e| bad(e.body_text()))?;
        while let Some(field) = form.next_field().await.map_err(|e| bad(e.body_text()))? {
            let name = field.name().unwrap_or_default().to_string();
            let data = field.bytes().await.map_err(|e| bad(e.body_text()))?;
            let text = || String::from_utf8_lossy(&data).trim().to_string();
            match name.as_str() {
                "file" | "csv" => up.csv = data.to_vec(),
                "tool_id" => {
                    up.tool_id = Some(
                        text()
                            .parse()
                            .map_err(|_| bad("tool_id must be a number".into()))?,
                    )
                }
                "name" => up.name = text(),
                "config" => {
                    up.config = serde_json::from_slice(&data)
                        .map_err(|e| ServiceError::InvalidConfig(e.to_string()))?
                }
                other => return Err(bad(format!("unexpected form field `{other}`"))),
            }
        }
    } else {
        up.csv = Bytes::from_request(req, &())
            .await
            .map_err(|e| bad(e.body_text()))?
            .to_vec();
    }
    apply_query(&mut up.config, q);
    Ok(up)
}

async fn create_experiment(
    State(app): State<App>,
    Query(q): Query<UploadQuery>,
    req: Request,
) -> Response {
    let headers = req.headers().clone();
    let user = match caller(&app, &headers) {
        Ok(u) => u,
        Err(e) => return e.into_response(),
    };
    let up = match read_upload(&app, &q, req).await {
        Ok(u) => u,
        Err(e) => return e.into_response(),
    };
    let Some(tool_id) = up.tool_id else {
        return ServiceError::InvalidRequest("tool_id is required".into()).into_response();
    };
    let worker = app.clone();
    let result = tokio::task::spawn_blocking(move || {
        idempotent(&worker, &headers, user, "experiments", || {
            let e = worker.service.create_experiment(
                user,
                tool_id,
                &up.name,
                &up.csv,
                Some(up.config),
            )?;
            Ok(json_reply(StatusCode::CREATED, &e))
        })
    })
    .await;
    result.unwrap_or_else(|e| ServiceError::Internal(e.to_string()).into_response())
}

async fn get_experiment(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<u64>,
) -> Response {
    let r = caller(&app, &headers).and_then(|_| app.service.experiment(id));
    match r {
        Ok(e) => Json(e).into_response(),
        Err(e) => e.into_response(),
    }
}

#[derive(Deserialize)]
struct Invite {
    user_ids: Vec<UserId>,
}

async fn invite_judges(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<u64>,
    Json(inv): Json<Invite>,
) -> Response {
    let user = match caller(&app, &headers) {
        Ok(u) => u,
        Err(e) => return e.into_response(),
    };
    idempotent(
        &app,
        &headers,
        user,
        &format!("experiments/{id}/judges"),
        || {
            let e = app.service.invite_judges(user, id, &inv.user_ids)?;
            Ok(json_reply(StatusCode::OK, &e))
        },
    )
}

async fn judge_tasks(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<UserId>,
) -> Response {
    match caller(&app, &headers).and_then(|u| app.service.judge_tasks(u, id)) {
        Ok(t) => Json(t).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn get_task(State(app): State<App>, headers: HeaderMap, Path(id): Path<u64>) -> Response {
    match caller(&app, &headers).and_then(|u| app.service.task(u, id)) {
        Ok(t) => Json(t).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn submit_judgment(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<u64>,
    Json(j): Json<Judgment>,
) -> Response {
    let user = match caller(&app, &headers) {
        Ok(u) => u,
        Err(e) => return e.into_response(),
    };
    idempotent(
        &app,
        &headers,
        user,
        &format!("tasks/{id}/judgment"),
        || {
            let t = app.service.submit_judgment(user, id, &j)?;
            Ok(json_reply(StatusCode::OK, &t))
        },
    )
}

async fn get_report(State(app): State<App>, headers: HeaderMap, Path(id): Path<u64>) -> Response {
    match caller(&app, &headers).and_then(|_| app.service.report(id)) {
        Ok(bytes) => raw(StatusCode::OK, bytes.as_ref().clone()),
        Err(e) => e.into_response(),
    }
}

async fn export_labels(State(app): State<App>, headers: HeaderMap) -> Response {
    match caller(&app, &headers).and_then(|_| app.service.export_labels()) {
        Ok(bytes) => (StatusCode::OK, [(header::CONTENT_TYPE, "text/csv")], bytes).into_response(),
        Err(e) => e.into_response(),
    }
}
