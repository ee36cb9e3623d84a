use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use cplan::http::{router, AppState};
use cplan::service::Service;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct Api {
    app: Router,
    token: Option<&'static str>,
    _dir: TempDir,
}

impl Api {
    fn new() -> Self {
        Self::with_token(None)
    }

    fn with_token(token: Option<&'static str>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (service, _) = Service::open(dir.path()).unwrap();
        Self {
            app: router(AppState::new(service, token.map(String::from))),
            token,
            _dir: dir,
        }
    }

    async fn send(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = self.token {
            req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.send(Method::GET, uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.send(Method::POST, uri, Some(body)).await
    }

    async fn new_session(&self) -> u64 {
        let (status, body) = self.send(Method::POST, "/api/sessions", None).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["id"].as_u64().unwrap()
    }
}

fn situation(cp: f64, cpk: f64, ncr: f64, encr: f64) -> Value {
    json!({
        "cp": cp, "cpk": cpk, "ncr": ncr, "encr": encr,
        "objectives": {"cp": 1.0, "cpk": 1.0, "ncr": 40, "encr": 10}
    })
}

fn seeded_case() -> Value {
    json!({
        "id": 1,
        "situation": {"cp": 0.95, "cpk": 1.2, "ncr": 39, "encr": 10},
        "scenario_id": "S3",
        "objectives": {"cp": 1.0, "cpk": 1.0, "ncr": 40, "encr": 10},
        "observed": {"cp": 1.1, "cpk": 1.2, "ncr": 30, "encr": 8},
        "origin": "manual",
        "status": "satisfactory",
        "created_at": "2024-01-01T00:00:00Z"
    })
}

#[tokio::test]
async fn empty_base_routes_to_manual() {
    let api = Api::new();
    let id = api.new_session().await;
    let (status, body) = api
        .post(
            &format!("/api/sessions/{id}/situation"),
            situation(1.2, 1.2, 10.0, 3.0),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["state"], "ManualRequired");
    assert!(body["recommendation"].is_null());
}

#[tokio::test]
async fn seeded_base_recommends_s3_at_8_25() {
    let api = Api::new();
    let (status, body) = api.post("/api/cases", seeded_case()).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["case_ids"], json!([1]));
    let id = api.new_session().await;
    let (status, body) = api
        .post(
            &format!("/api/sessions/{id}/situation"),
            situation(0.9, 1.0, 47.0, 10.0),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["state"], "AutoRecommended");
    assert_eq!(body["recommendation"]["scenario_id"], "S3");
    assert_eq!(body["recommendation"]["distance"].as_f64(), Some(8.25));
    assert_eq!(body["recommendation"]["source_case"], 1);
}

#[tokio::test]
async fn illegal_transitions_leave_the_session_unchanged() {
    let api = Api::new();
    api.post("/api/cases", seeded_case()).await;
    let id = api.new_session().await;
    api.post(
        &format!("/api/sessions/{id}/situation"),
        situation(0.9, 1.0, 47.0, 10.0),
    )
    .await;
    let decision = format!("/api/sessions/{id}/decision");
    let (status, body) = api.post(&decision, json!({"action": "accept"})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["state"], "ScenarioSelected");

    let (_, before) = api.get(&format!("/api/sessions/{id}")).await;
    let (status, body) = api.post(&decision, json!({"action": "accept"})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "illegal_transition");
    let (status, _) = api
        .post(
            &format!("/api/sessions/{id}/results"),
            json!({"cp": 1, "cpk": 1, "ncr": 1, "encr": 1}),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, after) = api.get(&format!("/api/sessions/{id}")).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn validation_errors_name_fields() {
    let api = Api::new();
    let id = api.new_session().await;
    let (status, body) = api
        .post(
            &format!("/api/sessions/{id}/situation"),
            situation(-1.0, 1.0, 150.0, 3.0),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "validation_failed");
    let fields: Vec<&str> = body["details"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["field"].as_str().unwrap())
        .collect();
    assert!(
        fields.contains(&"cp") && fields.contains(&"ncr"),
        "{fields:?}"
    );

    let (status, body) = api
        .post(&format!("/api/sessions/{id}/situation"), json!({"cp": 1}))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (_, session) = api.get(&format!("/api/sessions/{id}")).await;
    assert_eq!(session["state"], "Created");
}

#[tokio::test]
async fn unknown_things_are_404() {
    let api = Api::new();
    assert_eq!(api.get("/api/sessions/99").await.0, StatusCode::NOT_FOUND);
    assert_eq!(api.get("/api/sessions/abc").await.0, StatusCode::NOT_FOUND);
    let (status, body) = api.get("/api/nowhere").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
    let (status, _) = api.send(Method::DELETE, "/api/config", None).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
}

#[tokio::test]
async fn manual_evaluation_from_matrices_and_close() {
    let api = Api::new();
    let id = api.new_session().await;
    let base = format!("/api/sessions/{id}");
    api.post(&format!("{base}/situation"), situation(1.2, 1.2, 10.0, 3.0))
        .await;

    // Inconsistent Risk judgments: accepted with a warning under the default policy.
    let matrices = json!([
        {"label": "Risk", "rows": [[1, 3, 5, 1], [0.3333333333333333, 1, 3, 5], [0.2, 0.3333333333333333, 1, 3], [1, 0.2, 0.3333333333333333, 1]]},
        {"label": "Cost", "rows": [[1, 1, 0.5, 1], [1, 1, 0.5, 1], [2, 2, 1, 2], [1, 1, 0.5, 1]]},
        {"label": "Time", "rows": [[1, 1, 0.5, 1], [1, 1, 0.5, 1], [2, 2, 1, 2], [1, 1, 0.5, 1]]}
    ]);
    let capacity =
        serde_json::from_str::<Value>(include_str!("../fixtures/fitted_capacity.json")).unwrap();
    let (status, body) = api
        .post(
            &format!("{base}/manual"),
            json!({"matrices": matrices, "capacity": capacity}),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["state"], "ManualEvaluated");
    assert_eq!(body["ranking"].as_array().unwrap().len(), 4);
    assert_eq!(body["consistency"][0]["acceptable"], false);
    assert!(!body["warnings"].as_array().unwrap().is_empty());

    // Strict policy turns the same judgments into a domain error.
    let (status, _) = api
        .send(Method::PUT, "/api/config", Some(json!({
            "retrieval": {"threshold": 10, "order_p": 1, "attribute_weights": [1, 1, 1, 1], "repair_margin": 0.05},
            "consistency": {"threshold": 0.1, "strict": true}
        })))
        .await;
    assert_eq!(status, StatusCode::OK);
    let (_, before) = api.get(&base).await;
    let (status, body) = api
        .post(
            &format!("{base}/manual"),
            json!({"matrices": matrices, "capacity": capacity}),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(api.get(&base).await.1, before);

    let best = before["evaluation"]["ranking"][0]["alternative"]
        .as_str()
        .unwrap()
        .to_string();
    let (status, body) = api
        .post(&format!("{base}/selection"), json!({"scenario_id": best}))
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(
        api.post(&format!("{base}/apply"), json!({"basis": "one week"}))
            .await
            .0,
        StatusCode::OK
    );
    let (status, _) = api
        .post(
            &format!("{base}/results"),
            json!({"cp": 1.3, "cpk": 1.3, "ncr": 5, "encr": 1}),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = api.send(Method::POST, &format!("{base}/close"), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["status"], "satisfactory");
    assert_eq!(body["case_id"], 1);

    let (_, cases) = api.get("/api/cases").await;
    assert_eq!(cases.as_array().unwrap().len(), 1);
    let (_, audit) = api.get(&format!("{base}/audit")).await;
    let kinds: Vec<&str> = audit
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["kind"].as_str().unwrap())
        .collect();
    assert!(
        kinds.contains(&"transition") && kinds.contains(&"retention"),
        "{kinds:?}"
    );
}

#[tokio::test]
async fn non_monotone_capacity_is_a_domain_error() {
    let api = Api::new();
    let id = api.new_session().await;
    api.post(
        &format!("/api/sessions/{id}/situation"),
        situation(1.2, 1.2, 10.0, 3.0),
    )
    .await;
    let table =
        serde_json::from_str::<Value>(include_str!("../fixtures/scenario_table.json")).unwrap();
    let capacity = json!({"criteria": ["Risk", "Cost", "Time"], "values": [
        {"subset": [], "value": 0}, {"subset": ["Risk"], "value": 0.6},
        {"subset": ["Cost"], "value": 0.2}, {"subset": ["Time"], "value": 0.2},
        {"subset": ["Risk", "Cost"], "value": 0.5}, {"subset": ["Risk", "Time"], "value": 0.7},
        {"subset": ["Cost", "Time"], "value": 0.4}, {"subset": ["Risk", "Cost", "Time"], "value": 1}
    ]});
    let (status, body) = api
        .post(
            &format!("/api/sessions/{id}/manual"),
            json!({"table": table, "capacity": capacity}),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(body["code"], "domain_error");
}

#[tokio::test]
async fn scenario_catalog_edits() {
    let api = Api::new();
    let (_, list) = api.get("/api/scenarios").await;
    assert_eq!(list.as_array().unwrap().len(), 4);
    let (status, _) = api
        .post(
            "/api/scenarios",
            json!({"id": "S5", "name": "Full inspection"}),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = api
        .post("/api/scenarios", json!({"id": "S5", "name": "again"}))
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    let (status, _) = api
        .send(
            Method::PUT,
            "/api/scenarios/S5",
            Some(json!({"id": "S5", "name": "Full inspection, all lots"})),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = api
        .send(
            Method::PUT,
            "/api/scenarios/S6",
            Some(json!({"id": "S6", "name": "x"})),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = api
        .send(Method::PUT, "/api/scenarios", Some(json!([])))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, health) = api.get("/api/health").await;
    assert_eq!(health["scenarios"], 5);
}

#[tokio::test]
async fn bearer_token_guards_everything_but_health() {
    let api = Api::with_token(Some("s3cret"));
    assert_eq!(api.get("/api/sessions").await.0, StatusCode::OK);

    let open = Api {
        app: api.app.clone(),
        token: None,
        _dir: tempfile::tempdir().unwrap(),
    };
    let (status, body) = open.get("/api/sessions").await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(body["code"], "unauthorized");
    assert_eq!(open.get("/api/health").await.0, StatusCode::OK);
}
