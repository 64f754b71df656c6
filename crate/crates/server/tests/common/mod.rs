//! Scripted API exchanges and golden transcript files.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{header, Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use ndc_search::bench::{generate, CorpusSpec, Pools};
use ndc_search::store::Durability;
use ndc_server::ApiConfig;
use serde::Serialize;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const TOKEN: &str = "test-token";

/// Rows ahead of the fixed ones, so the first fixed row lands on p_value 133.
pub const FILLER_ROWS: usize = 132;

pub fn abdullah_row(i: usize) -> Vec<String> {
    let phone = format!("88017000411{i:02}");
    ["Abdullah", "Khulna", "Chandpur", "Haimchar", "Naikhong", "Gorea", "Employee", &phone]
        .map(String::from)
        .to_vec()
}

/// Shares one token with "khuln": the village.
pub fn ibtihal_row(i: usize) -> Vec<String> {
    let phone = format!("88019000222{i:02}");
    ["Ibtihal Sarkar", "Barisal", "Bhola", "Lalmohan", "Char Bhuta", "Kholna", "Farmer", &phone]
        .map(String::from)
        .to_vec()
}

pub fn config(dir: &Path) -> ApiConfig {
    ApiConfig {
        data_dir: dir.to_path_buf(),
        api_token: Some(TOKEN.into()),
        durability: Durability::OsBuffered,
        ..ApiConfig::default()
    }
}

pub fn app(dir: &Path) -> Router {
    ndc_server::app(config(dir)).expect("open data dir")
}

#[derive(Debug, Clone)]
pub struct Step {
    pub method: Method,
    pub path: String,
    pub body: Option<String>,
    pub token: Option<&'static str>,
}

impl Step {
    pub fn get(path: impl Into<String>) -> Self {
        Self {
            method: Method::GET,
            path: path.into(),
            body: None,
            token: None,
        }
    }

    pub fn send(method: Method, path: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            method,
            path: path.into(),
            body: Some(body.into()),
            token: Some(TOKEN),
        }
    }

    pub fn delete(path: impl Into<String>) -> Self {
        Self {
            method: Method::DELETE,
            path: path.into(),
            body: None,
            token: Some(TOKEN),
        }
    }

    pub fn token(mut self, token: Option<&'static str>) -> Self {
        self.token = token;
        self
    }
}

/// One request and what came back. Non-JSON bodies are kept as their
/// content type and length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exchange {
    pub method: String,
    pub path: String,
    pub status: u16,
    pub body: Value,
}

pub async fn exec(app: &Router, step: &Step) -> Exchange {
    let mut req = Request::builder().method(step.method.clone()).uri(&step.path);
    if let Some(t) = step.token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    if step.body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req
        .body(step.body.clone().map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status().as_u16();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_string();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() {
        Value::Null
    } else if content_type.starts_with("application/json") {
        serde_json::from_slice(&bytes).unwrap()
    } else {
        json!({ "content_type": content_type, "len": bytes.len() })
    };
    Exchange {
        method: step.method.to_string(),
        path: step.path.clone(),
        status,
        body,
    }
}

pub async fn run_script(app: &Router, steps: &[Step]) -> Vec<Exchange> {
    let mut out = Vec::with_capacity(steps.len());
    for s in steps {
        out.push(exec(app, s).await);
    }
    out
}

fn array(row: &[String]) -> String {
    serde_json::to_string(row).unwrap()
}

/// Every endpoint behavior the service promises, in one replayable order.
pub fn golden_script() -> Vec<Step> {
    let records = "/tables/citizen/records";
    let mut s = Vec::new();
    for row in generate(&Pools::bangladesh(), CorpusSpec { record_count: FILLER_ROWS, seed: 133 }).unwrap() {
        s.push(Step::send(Method::POST, records, array(&row)));
    }
    for i in 0..7 {
        s.push(Step::send(Method::POST, records, array(&abdullah_row(i))));
    }
    for i in 0..2 {
        s.push(Step::send(Method::POST, records, array(&ibtihal_row(i))));
    }

    // retrieve
    s.push(Step::get(format!("{records}/133")));
    s.push(Step::get(format!("{records}/141")));
    s.push(Step::get(format!("{records}/99999")));
    s.push(Step::get(format!("{records}/abc")));
    s.push(Step::get(format!("{records}/-1")));
    s.push(Step::get("/tables/nope/records/1"));

    // search
    s.push(Step::get("/search?q=Abdullah%20khuln&limit=12"));
    s.push(Step::get("/search?q=Abdullah%20khuln&min_score=90"));
    s.push(Step::get("/search?q=smith&limit=3"));
    s.push(Step::get("/search?q=zzzzqqq"));
    s.push(Step::get("/search?q=123%20456"));
    s.push(Step::get("/search?q="));
    s.push(Step::get("/search"));
    s.push(Step::get("/search?q=Abdullah&limit=0"));
    s.push(Step::get("/search?q=Abdullah&min_score=101"));
    s.push(Step::get("/search?q=Abdullah&limit=ten"));

    // insert
    let object = json!({
        "name": "Shafiqul Islam", "division": "Rajshahi", "district": "Bogra",
        "upazila": "Sherpur", "union": "Kusumbi", "village": "Mirzapur",
        "occupation": "Teacher", "phone": "8801711000001"
    });
    s.push(Step::send(Method::POST, records, object.to_string()));
    s.push(Step::send(Method::POST, records, array(&abdullah_row(9))).token(None));
    s.push(Step::send(Method::POST, records, array(&abdullah_row(9))).token(Some("wrong")));
    s.push(Step::send(Method::POST, records, r#"["only", "three", "fields"]"#));
    s.push(Step::send(Method::POST, records, r#"{"name": "Missing Everything"}"#));
    s.push(Step::send(Method::POST, records, r#"[1, 2, 3, 4, 5, 6, 7, 8]"#));
    s.push(Step::send(Method::POST, records, "not json"));
    s.push(Step::send(Method::POST, records, r#"["a\u001fb", "", "", "", "", "", "", ""]"#));
    s.push(Step::send(Method::POST, "/tables/nope/records", array(&abdullah_row(9))));
    s.push(Step::get(format!("{records}/142")));
    s.push(Step::get("/search?q=shafikul&limit=3"));

    // update
    let mut moved = abdullah_row(0);
    moved[1] = "Dhaka".into();
    s.push(Step::send(Method::PUT, format!("{records}/133"), array(&moved)));
    s.push(Step::get(format!("{records}/133")));
    s.push(Step::get("/search?q=Abdullah%20khuln&limit=9"));
    s.push(Step::send(Method::PUT, format!("{records}/99999"), array(&moved)));
    s.push(Step::send(Method::PUT, format!("{records}/134"), array(&moved)).token(None));
    s.push(Step::send(Method::PUT, format!("{records}/134"), "[]"));

    // delete
    s.push(Step::delete(format!("{records}/134")));
    s.push(Step::delete(format!("{records}/134")));
    s.push(Step::delete(format!("{records}/99999")));
    s.push(Step::get(format!("{records}/134")));
    s.push(Step::delete("/tables/nope/records/134"));
    s.push(Step::delete(format!("{records}/135")).token(None));
    s.push(Step::delete(format!("{records}/x")));
    s.push(Step::get("/search?q=Abdullah%20khuln&min_score=90"));

    // static page
    s.push(Step::get("/"));
    s
}

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn to_lines(transcript: &[Exchange]) -> String {
    transcript
        .iter()
        .map(|e| serde_json::to_string(e).unwrap() + "\n")
        .collect()
}

/// Compares against `tests/fixtures/{name}`; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, transcript: &[Exchange]) {
    let path = fixture_path(name);
    let got = to_lines(transcript);
    if std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        fs::write(&path, &got).unwrap();
        return;
    }
    let want = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1 to record", path.display()));
    for (i, (g, w)) in got.lines().zip(want.lines()).enumerate() {
        assert_eq!(g, w, "{name} line {} differs", i + 1);
    }
    assert_eq!(got.lines().count(), want.lines().count(), "{name} length differs");
}

/// Golden run plus a replay on a second fresh directory.
pub async fn golden_and_replay() {
    let script = golden_script();
    let a = tempfile::tempdir().unwrap();
    let first = run_script(&app(a.path()), &script).await;
    check_golden("api_golden.jsonl", &first);

    let b = tempfile::tempdir().unwrap();
    let second = run_script(&app(b.path()), &script).await;
    assert_eq!(first, second, "replay on a fresh data dir diverged");
}
