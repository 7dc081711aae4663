//! JSON-over-HTTP recalibration service.
//!
//! | route               | request                                    | response                          |
//! |---------------------|--------------------------------------------|-----------------------------------|
//! | `GET /health`       |                                            | [`HealthResponse`]                |
//! | `POST /recalibrate` | [`RecalibrateRequest`]                     | [`RecalibrateResponse`]           |
//! | `POST /recommend`   | [`RecommendRequest`] (every field optional) | [`RecommendResponse`]             |
//!
//! Errors are `{"error": "..."}` with status 400 for malformed or invalid
//! input, 409 when `/recommend` runs before any model is fitted, 503 while
//! a refit is in progress (for `/recalibrate`, and for `/recommend` when no
//! earlier model exists), and 500 when the audit log cannot be written.
//!
//! Refits are serialized and swap the model in atomically; recommendations
//! read the current model concurrently and append to the single audit log
//! writer one request at a time.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use subprice::churn::ChurnModel;
use subprice::elasticity::ElasticityEstimate;
use subprice::governance::{
    drift_panel, record_solution, AuditLog, Clock, DriftReport, ExplainReport,
};
use subprice::optimizer::{GuardrailConfig, SolveStatus, SolverConfig};
use subprice::panel::{build_panel, FeatureSchema, SubscriptionPanel, SubscriptionRecord};

use crate::pipeline::{self, FitOutput, RunConfig};

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

/// New panel rows. The first call must carry the feature schema; later
/// calls may repeat it but cannot change it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecalibrateRequest {
    pub records: Vec<SubscriptionRecord>,
    #[serde(default)]
    pub schema: Option<FeatureSchema>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecalibrateResponse {
    pub model_version: u64,
    pub fitted_at: String,
    /// Rows in the panel the model was fitted on.
    pub n_records: usize,
    /// Whether the elasticity priors were centred on the previous fit.
    pub warm_started: bool,
    pub estimates: Vec<ElasticityEstimate>,
    pub churn: ChurnModel,
    /// Predicted churn at each segment's current price.
    pub churn_probabilities: BTreeMap<String, f64>,
    /// Drift of the new rows against the previous panel.
    pub drift: Option<Vec<DriftReport>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RecommendRequest {
    /// Status-quo guardrails when absent.
    #[serde(default)]
    pub guardrails: Option<GuardrailConfig>,
    #[serde(default)]
    pub churn_headroom: Option<f64>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub model_version: u64,
    /// Byte-for-byte the solution JSON the command line writes.
    pub solution: Box<RawValue>,
    pub explanations: Vec<ExplainReport>,
    pub audit_sequence_numbers: Vec<u64>,
    /// Set when the solver fell back and the entries await an override.
    pub pending_override: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub fitted: bool,
    pub model_version: Option<u64>,
    pub fitted_at: Option<String>,
    pub last_drift: Option<Vec<DriftReport>>,
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("no fitted model; POST /recalibrate first")]
    NoModel,
    #[error("a refit is in progress")]
    Busy,
    #[error("{0}")]
    Internal(String),
}

impl From<subprice::Error> for ApiError {
    fn from(e: subprice::Error) -> Self {
        match e {
            subprice::Error::StorageFailure(_) | subprice::Error::Io(_) => {
                ApiError::Internal(e.to_string())
            }
            other => ApiError::BadRequest(other.to_string()),
        }
    }
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NoModel => StatusCode::CONFLICT,
            ApiError::Busy => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status(),
            Json(serde_json::json!({ "error": self.to_string() })),
        )
            .into_response()
    }
}

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

struct ModelSlot {
    panel: SubscriptionPanel,
    fit: FitOutput,
    fitted_at: String,
    version: u64,
    drift: Option<Vec<DriftReport>>,
}

pub struct AppState {
    cfg: RunConfig,
    slot: RwLock<Option<Arc<ModelSlot>>>,
    refit: Mutex<()>,
    audit: Mutex<AuditLog>,
    clock: Clock,
}

impl AppState {
    /// `cfg` should already be seeded; see [`RunConfig::seeded`].
    pub fn new(cfg: RunConfig, audit_log: PathBuf, clock: Clock) -> subprice::Result<Arc<Self>> {
        let audit = AuditLog::open(audit_log, clock.clone())?;
        Ok(Arc::new(AppState {
            cfg,
            slot: RwLock::new(None),
            refit: Mutex::new(()),
            audit: Mutex::new(audit),
            clock,
        }))
    }

    fn current(&self) -> Option<Arc<ModelSlot>> {
        self.slot.read().expect("model slot poisoned").clone()
    }

    fn refitting(&self) -> bool {
        matches!(
            self.refit.try_lock(),
            Err(std::sync::TryLockError::WouldBlock)
        )
    }

    /// Fits on a whole panel, replacing any current model.
    pub fn recalibrate_blocking(
        &self,
        panel: SubscriptionPanel,
    ) -> Result<RecalibrateResponse, ApiError> {
        let _guard = self.refit.try_lock().map_err(|_| ApiError::Busy)?;
        self.install(panel, None, false)
    }

    fn recalibrate(&self, req: RecalibrateRequest) -> Result<RecalibrateResponse, ApiError> {
        let _guard = self.refit.try_lock().map_err(|_| ApiError::Busy)?;
        if req.records.is_empty() {
            return Err(ApiError::BadRequest("no records supplied".into()));
        }
        match self.current() {
            None => {
                let schema = req.schema.ok_or_else(|| {
                    ApiError::BadRequest("the first recalibration needs a schema".into())
                })?;
                self.install(build_panel(req.records, schema)?, None, false)
            }
            Some(prev) => {
                if req
                    .schema
                    .as_ref()
                    .is_some_and(|s| s != prev.panel.schema())
                {
                    return Err(ApiError::BadRequest(
                        "schema differs from the fitted panel's".into(),
                    ));
                }
                let delta = build_panel(req.records.clone(), prev.panel.schema().clone())?;
                let drift = drift_panel(&prev.panel, &delta, self.cfg.drift_threshold)?;
                let combined = prev.panel.extend(req.records)?;
                self.install(combined, Some((prev, drift)), true)
            }
        }
    }

    fn install(
        &self,
        panel: SubscriptionPanel,
        previous: Option<(Arc<ModelSlot>, Vec<DriftReport>)>,
        warm: bool,
    ) -> Result<RecalibrateResponse, ApiError> {
        let priors = match &previous {
            Some((prev, _)) if warm => prev.fit.next_priors.clone(),
            _ => self.cfg.fit.priors.clone(),
        };
        let fit = pipeline::fit(&panel, &self.cfg.fit, &priors)?;
        let slot = ModelSlot {
            version: self.current().map_or(0, |s| s.version) + 1,
            fitted_at: self.clock.now(),
            drift: previous.map(|(_, d)| d),
            panel,
            fit,
        };
        let response = RecalibrateResponse {
            model_version: slot.version,
            fitted_at: slot.fitted_at.clone(),
            n_records: slot.panel.records().len(),
            warm_started: warm,
            estimates: slot.fit.models.estimates.clone(),
            churn: slot.fit.models.churn.clone(),
            churn_probabilities: pipeline::churn_at_current_prices(&slot.fit.models)?
                .into_iter()
                .collect(),
            drift: slot.drift.clone(),
        };
        *self.slot.write().expect("model slot poisoned") = Some(Arc::new(slot));
        Ok(response)
    }

    fn recommend(&self, req: RecommendRequest) -> Result<RecommendResponse, ApiError> {
        let slot = match self.current() {
            Some(s) => s,
            None if self.refitting() => return Err(ApiError::Busy),
            None => return Err(ApiError::NoModel),
        };
        let solver = req.solver.unwrap_or_else(|| self.cfg.solver.clone());
        let headroom = req.churn_headroom.unwrap_or(self.cfg.churn_headroom);
        let rec =
            pipeline::recommend(&slot.fit.models, req.guardrails.as_ref(), headroom, &solver)?;
        let raw = RawValue::from_string(pipeline::solution_json(&rec.solution)?)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        let seqs = {
            let mut log = self.audit.lock().expect("audit log poisoned");
            record_solution(
                &mut log,
                &rec.solution,
                &rec.explanations,
                &rec.input_digest,
            )?
        };
        Ok(RecommendResponse {
            model_version: slot.version,
            solution: raw,
            explanations: rec.explanations,
            audit_sequence_numbers: seqs,
            pending_override: rec.solution.status == SolveStatus::Fallback,
        })
    }

    fn health(&self) -> HealthResponse {
        let slot = self.current();
        HealthResponse {
            fitted: slot.is_some(),
            model_version: slot.as_ref().map(|s| s.version),
            fitted_at: slot.as_ref().map(|s| s.fitted_at.clone()),
            last_drift: slot.and_then(|s| s.drift.clone()),
        }
    }
}

// ---------------------------------------------------------------------------
// Routes
// ---------------------------------------------------------------------------

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/recalibrate", post(recalibrate))
        .route("/recommend", post(recommend))
        .with_state(state)
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn health(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    Json(state.health())
}

async fn recalibrate(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<RecalibrateResponse>, ApiError> {
    let req: RecalibrateRequest = parse(&body)?;
    blocking(move || state.recalibrate(req)).await.map(Json)
}

async fn recommend(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<RecommendResponse>, ApiError> {
    let req: RecommendRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RecommendRequest::default()
    } else {
        parse(&body)?
    };
    blocking(move || state.recommend(req)).await.map(Json)
}
