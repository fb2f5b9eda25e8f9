//! In-process HTTP client over the router, and the scripted six-cell walk.

#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use branchbook_core::Config;
use branchbook_server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const CARS_CSV: &[u8] = include_bytes!("../../../../data/cars.csv");
pub const CARS_TOML: &str = include_str!("../../../../data/cars.toml");

pub fn cars_config() -> Config {
    Config::from_toml_str(CARS_TOML).unwrap()
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

#[derive(Clone)]
pub struct Client {
    app: Router,
}

impl Client {
    pub fn new(state: AppState) -> Self {
        Self { app: router(state, None) }
    }

    pub fn cars() -> Self {
        Self::new(AppState::new(cars_config()))
    }

    pub async fn send(&self, method: Method, uri: &str, body: Body) -> Reply {
        let request = Request::builder().method(method).uri(uri).body(body).unwrap();
        let response = self.app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let content_type = response
            .headers()
            .get("content-type")
            .map(|v| v.to_str().unwrap().to_string());
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        Reply { status, content_type, text: String::from_utf8(bytes.to_vec()).unwrap() }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, Body::empty()).await
    }

    pub async fn delete(&self, uri: &str) -> Reply {
        self.send(Method::DELETE, uri, Body::empty()).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::POST, uri, Body::from(body.to_string())).await
    }

    pub async fn upload(&self, name: &str, csv: &[u8]) -> Reply {
        self.send(Method::POST, &format!("/datasets?name={name}"), Body::from(csv.to_vec())).await
    }

    pub async fn upload_cars(&self) -> String {
        let reply = self.upload("cars", CARS_CSV).await;
        assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.text);
        reply.json()["datasetId"].as_str().unwrap().to_string()
    }

    /// Runs the six-cell walk: the lowest-horsepower-year root, its why
    /// question, the first and third actions, then the first two
    /// attribute-related questions on the root. Returns the session id.
    pub async fn fig1(&self, dataset: &str) -> String {
        let created = self
            .post("/sessions", json!({ "datasetId": dataset, "rootSelector": "extremum:Year,Horsepower:lowest" }))
            .await;
        assert_eq!(created.status, StatusCode::CREATED, "{}", created.text);
        let sid = created.json()["sessionId"].as_str().unwrap().to_string();
        let base = format!("/sessions/{sid}/cells");

        let panel = self.get(&format!("{base}/1/recommendations")).await.json();
        assert_eq!(panel[0]["aggregated"], true);
        let why = panel[0]["id"].clone();
        self.expect_cell(&format!("{base}/1/select"), json!({ "questionId": why }), 2).await;
        self.expect_cell(&format!("{base}/2/select"), json!({ "actionIndex": 0 }), 3).await;
        self.expect_cell(&format!("{base}/2/select"), json!({ "actionIndex": 2 }), 4).await;

        let panel = self.get(&format!("{base}/1/recommendations")).await.json();
        let attr: Vec<&Value> = panel
            .as_array()
            .unwrap()
            .iter()
            .filter(|q| q["kind"] == "attribute_related")
            .collect();
        self.expect_cell(&format!("{base}/1/select"), json!({ "questionId": attr[0]["id"] }), 5).await;
        self.expect_cell(&format!("{base}/1/select"), json!({ "questionId": attr[1]["id"] }), 6).await;
        sid
    }

    async fn expect_cell(&self, uri: &str, body: Value, id: u64) {
        let reply = self.post(uri, body).await;
        assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.text);
        assert_eq!(reply.json()["cell"]["id"], id);
    }
}

/// `(from, to)` pairs of a tree snapshot.
pub fn edges(tree: &Value) -> Vec<(u64, u64)> {
    tree["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["from"].as_u64().unwrap(), e["to"].as_u64().unwrap()))
        .collect()
}
