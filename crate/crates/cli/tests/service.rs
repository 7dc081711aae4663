mod common;

use axum::http::StatusCode;
use common::{app, call};
use subprice::governance::{read_audit_log, ApprovalStatus};
use subprice::optimizer::GuardrailConfig;
use subprice::synthgen::{generate_population, GenConfig};
use subprice_cli::service::{RecalibrateRequest, RecommendRequest};

fn population(seed: u64) -> subprice::panel::SubscriptionPanel {
    generate_population(&GenConfig {
        n_segments: 8,
        seed,
        ..Default::default()
    })
    .unwrap()
    .0
}

fn first_request(panel: &subprice::panel::SubscriptionPanel, last: i64) -> String {
    let head = panel.filter_periods(1, last);
    serde_json::to_string(&RecalibrateRequest {
        records: head.records().to_vec(),
        schema: Some(panel.schema().clone()),
    })
    .unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn unfitted_service_reports_and_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path(), 7);
    let (status, health, _) = call(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(health["fitted"], false);
    assert!(health["model_version"].is_null());

    let (status, body, _) = call(&app, "POST", "/recommend", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("recalibrate"));
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_requests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path(), 7);
    let (status, body, _) = call(&app, "POST", "/recalibrate", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].is_string());

    let panel = population(1);
    let no_schema = serde_json::to_string(&RecalibrateRequest {
        records: panel.records().to_vec(),
        schema: None,
    })
    .unwrap();
    assert_eq!(
        call(&app, "POST", "/recalibrate", Some(no_schema)).await.0,
        StatusCode::BAD_REQUEST
    );

    let empty = serde_json::to_string(&RecalibrateRequest {
        records: vec![],
        schema: Some(panel.schema().clone()),
    })
    .unwrap();
    assert_eq!(
        call(&app, "POST", "/recalibrate", Some(empty)).await.0,
        StatusCode::BAD_REQUEST
    );

    let mut bad = panel.records()[..40].to_vec();
    bad[3].price = -1.0;
    let bad = serde_json::to_string(&RecalibrateRequest {
        records: bad,
        schema: Some(panel.schema().clone()),
    })
    .unwrap();
    assert_eq!(
        call(&app, "POST", "/recalibrate", Some(bad)).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(call(&app, "GET", "/health", None).await.1["fitted"], false);
}

#[tokio::test(flavor = "multi_thread")]
async fn recalibrate_recommend_and_extend() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path(), 7);
    let panel = population(3);
    let (hi_period, n_segments) = (panel.period_range().unwrap().1, panel.segments().len());

    let (status, fit, text) = call(
        &app,
        "POST",
        "/recalibrate",
        Some(first_request(&panel, hi_period - 1)),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{text}");
    assert_eq!(fit["model_version"], 1);
    assert_eq!(fit["warm_started"], false);
    assert_eq!(fit["fitted_at"], common::STAMP);
    assert_eq!(fit["estimates"].as_array().unwrap().len(), n_segments);
    assert_eq!(
        fit["churn_probabilities"].as_object().unwrap().len(),
        n_segments
    );
    assert!(fit["drift"].is_null());

    let (status, rec, text) = call(&app, "POST", "/recommend", Some("{}".into())).await;
    assert_eq!(status, StatusCode::OK, "{text}");
    assert_eq!(rec["model_version"], 1);
    assert_eq!(rec["pending_override"], false);
    let seqs: Vec<u64> = serde_json::from_value(rec["audit_sequence_numbers"].clone()).unwrap();
    assert_eq!(seqs, (1..=n_segments as u64).collect::<Vec<_>>());
    assert_eq!(
        rec["solution"]["prices"].as_object().unwrap().len(),
        n_segments
    );

    // One more period of data: a warm-started refit with a drift report.
    let tail = panel.filter_periods(hi_period, hi_period);
    let body = serde_json::to_string(&RecalibrateRequest {
        records: tail.records().to_vec(),
        schema: None,
    })
    .unwrap();
    let (status, refit, text) = call(&app, "POST", "/recalibrate", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{text}");
    assert_eq!(refit["model_version"], 2);
    assert_eq!(refit["warm_started"], true);
    assert_eq!(refit["n_records"], panel.records().len());
    assert!(!refit["drift"].as_array().unwrap().is_empty());

    let (_, health, _) = call(&app, "GET", "/health", None).await;
    assert_eq!(health["fitted"], true);
    assert_eq!(health["model_version"], 2);
    assert_eq!(health["last_drift"], refit["drift"]);

    let (_, rec2, _) = call(&app, "POST", "/recommend", None).await;
    assert_eq!(rec2["model_version"], 2);
    assert_eq!(rec2["audit_sequence_numbers"][0], n_segments as u64 + 1);
    assert_eq!(
        read_audit_log(dir.path().join("audit.jsonl"))
            .unwrap()
            .len(),
        2 * n_segments
    );
}

#[tokio::test(flavor = "multi_thread")]
async fn schema_cannot_change_between_refits() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path(), 7);
    let panel = population(4);
    let hi = panel.period_range().unwrap().1;
    assert_eq!(
        call(
            &app,
            "POST",
            "/recalibrate",
            Some(first_request(&panel, hi - 1))
        )
        .await
        .0,
        StatusCode::OK
    );
    let other =
        subprice::panel::FeatureSchema::new([("usage", subprice::panel::FeatureKind::Numeric)]);
    let tail = panel.filter_periods(hi, hi);
    let body = serde_json::to_string(&RecalibrateRequest {
        records: tail.records().to_vec(),
        schema: Some(other),
    })
    .unwrap();
    assert_eq!(
        call(&app, "POST", "/recalibrate", Some(body)).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        call(&app, "GET", "/health", None).await.1["model_version"],
        1
    );
}

#[tokio::test(flavor = "multi_thread")]
async fn infeasible_guardrails_fall_back_pending_override() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path(), 7);
    let panel = population(5);
    let hi = panel.period_range().unwrap().1;
    assert_eq!(
        call(
            &app,
            "POST",
            "/recalibrate",
            Some(first_request(&panel, hi))
        )
        .await
        .0,
        StatusCode::OK
    );

    let req = RecommendRequest {
        guardrails: Some(GuardrailConfig {
            default_churn_max: 1e-9,
            ..Default::default()
        }),
        ..Default::default()
    };
    let (status, rec, text) = call(
        &app,
        "POST",
        "/recommend",
        Some(serde_json::to_string(&req).unwrap()),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{text}");
    assert_eq!(rec["pending_override"], true);
    assert_eq!(rec["solution"]["status"], "fallback");
    let log = read_audit_log(dir.path().join("audit.jsonl")).unwrap();
    assert!(!log.is_empty());
    assert!(log
        .iter()
        .all(|e| e.approval_status == ApprovalStatus::PendingOverride));
}
