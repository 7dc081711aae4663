#![allow(dead_code)]

use std::path::Path;
use std::process::Output;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::Value;
use subprice::governance::Clock;
use subprice_cli::pipeline::RunConfig;
use subprice_cli::service::{router, AppState};
use tower::ServiceExt;

pub const STAMP: &str = "2026-01-01T00:00:00Z";

/// Runs the `subprice` binary with `--out-dir dir` prepended to `args`.
pub fn subprice(dir: &Path, args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_subprice"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("SUBPRICE_OUT_DIR")
        .env_remove("SUBPRICE_SEED")
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn app(dir: &Path, seed: u64) -> (Arc<AppState>, Router) {
    let cfg = RunConfig {
        seed,
        out_dir: dir.to_path_buf(),
        ..Default::default()
    }
    .seeded();
    let state = AppState::new(cfg, dir.join("audit.jsonl"), Clock::Fixed(STAMP.into())).unwrap();
    let router = router(state.clone());
    (state, router)
}

pub async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<String>,
) -> (StatusCode, Value, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = axum::body::to_bytes(res.into_body(), usize::MAX)
        .await
        .unwrap();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let json = serde_json::from_str(&text).unwrap_or(Value::Null);
    (status, json, text)
}
