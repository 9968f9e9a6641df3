//! Learning-mode HTTP service.
//!
//! `GET /api/v1/questions`, `GET /api/v1/schema` and `POST /api/v1/feedback`.
//! Responses never contain correct-query text or its canonical form; edits
//! are sent as rendered sentences only.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use sqlgrade_core::grader::{grade_with, GradeOutcome, HintDepth, PreparedAssignment};
use sqlgrade_core::rational;
use sqlgrade_core::schema::{RelationDef, Schema};
use sqlgrade_core::search::{Budget, Mode};

pub struct Service {
    pub schema: Schema,
    pub questions: Vec<PreparedAssignment>,
    pub mode: Mode,
    pub budget: Budget,
}

impl Service {
    /// Greedy search with a two second budget per request.
    pub fn new(schema: Schema, questions: Vec<PreparedAssignment>) -> Service {
        Service {
            schema,
            questions,
            mode: Mode::Greedy,
            budget: Budget {
                time: std::time::Duration::from_secs(2),
                ..Budget::GREEDY
            },
        }
    }
}

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/api/v1/questions", get(questions))
        .route("/api/v1/schema", get(schema))
        .route("/api/v1/feedback", post(feedback))
        .with_state(Arc::new(service))
}

#[derive(Serialize)]
struct QuestionView {
    question_id: String,
    prose: String,
    #[serde(with = "rational::serde_str")]
    max_marks: rational::Rational,
}

async fn questions(State(s): State<Arc<Service>>) -> Json<Vec<QuestionView>> {
    let views = s
        .questions
        .iter()
        .map(|q| QuestionView {
            question_id: q.assignment.question_id.clone(),
            prose: q.assignment.prose.clone(),
            max_marks: q.assignment.max_marks,
        })
        .collect();
    Json(views)
}

#[derive(Serialize)]
struct SchemaView<'a> {
    relations: Vec<&'a RelationDef>,
}

async fn schema(State(s): State<Arc<Service>>) -> Response {
    let view = SchemaView {
        relations: s.schema.relations.values().collect(),
    };
    Json(view).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackRequest {
    question_id: String,
    sql: String,
}

#[derive(Serialize, Debug, PartialEq)]
pub struct Diagnostic {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

#[derive(Serialize)]
struct FeedbackResponse {
    outcome: GradeOutcome,
    equivalent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    marks_fraction: Option<String>,
    edits: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostic>,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

async fn feedback(State(s): State<Arc<Service>>, body: Bytes) -> Response {
    let req: FeedbackRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")),
    };
    let Some(idx) = s.questions.iter().position(|q| q.assignment.question_id == req.question_id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown question `{}`", req.question_id));
    };
    let svc = s.clone();
    let graded = tokio::task::spawn_blocking(move || {
        let q = &svc.questions[idx];
        grade_with("", &req.sql, q, &svc.schema, svc.mode, svc.budget)
    })
    .await;
    let entry = match graded {
        Ok(e) => e,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let policy = &s.questions[idx].assignment.feedback;
    match entry.outcome {
        GradeOutcome::Rejected => {
            let body = FeedbackResponse {
                outcome: entry.outcome,
                equivalent: false,
                marks_fraction: None,
                edits: vec![],
                diagnostics: Some(Diagnostic {
                    message: entry.diagnostic.clone().unwrap_or_default(),
                    line: entry.position.map(|p| p.0),
                    column: entry.position.map(|p| p.1),
                }),
            };
            (StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response()
        }
        GradeOutcome::BudgetExceeded => {
            error(StatusCode::SERVICE_UNAVAILABLE, "the feedback search ran out of time; try again")
        }
        _ => {
            let edits = match policy.hints {
                HintDepth::All => entry.rendered_edits.clone(),
                HintDepth::First => entry.rendered_edits.iter().take(1).cloned().collect(),
                HintDepth::None => vec![],
            };
            let body = FeedbackResponse {
                outcome: entry.outcome,
                equivalent: entry.equivalent(),
                marks_fraction: policy.show_marks.then(|| rational::to_string(&entry.marks_fraction)),
                edits,
                diagnostics: None,
            };
            Json(body).into_response()
        }
    }
}
