//! HTTP JSON API for interactive elicitation sessions.
//!
//! Sessions live in memory and, when a snapshot directory is configured, are
//! written to `<dir>/<id>.json` after every change. No endpoint reads or
//! returns trial data.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use elicitsurv_core::{
    sample_prior, Arm, Constraint, ConstraintSet, DistKind, Error as CoreError, FittedDist, ModelFamily, PriorDraws,
    QuantityName,
};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use crate::config::{PriorConfig, QuantityConfig, RunConfig};
use crate::output::write_atomic;

pub const PREVIEW_DRAWS: usize = 20_000;
pub const PREVIEW_HORIZON: f64 = 30.0;
pub const PREVIEW_STEP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, field: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            field: field.map(str::to_string),
            message: message.into(),
        }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", None, format!("{what} not found"))
    }

    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", Some(field), message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", None, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityEntry {
    pub input: QuantityConfig,
    pub distribution: FittedDist,
    pub residual: f64,
    pub converged: bool,
}

/// Snapshot form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionData {
    pub id: String,
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub constraints: ConstraintSet,
    pub quantities: BTreeMap<QuantityName, QuantityEntry>,
    /// Unix seconds.
    pub created: u64,
    pub updated: u64,
}

#[derive(Debug)]
struct Session {
    data: SessionData,
    /// Keyed by `(family, seed, draws)`; cleared on every change.
    previews: HashMap<(ModelFamily, u64, usize), Arc<Preview>>,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
    snapshot_dir: Option<PathBuf>,
}

impl AppState {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads every `*.json` snapshot found in `dir`.
    pub fn with_snapshots(dir: PathBuf) -> crate::error::Result<Self> {
        std::fs::create_dir_all(&dir).map_err(crate::error::AppError::io(&dir))?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&dir).map_err(crate::error::AppError::io(&dir))? {
            let path = entry.map_err(crate::error::AppError::io(&dir))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(&path).map_err(crate::error::AppError::io(&path))?;
                let data: SessionData = serde_json::from_str(&text).map_err(|e| crate::error::AppError::Input {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                sessions.insert(
                    data.id.clone(),
                    Arc::new(Mutex::new(Session {
                        data,
                        previews: HashMap::new(),
                    })),
                );
            }
        }
        Ok(Self {
            sessions: Arc::new(RwLock::new(sessions)),
            snapshot_dir: Some(dir),
        })
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::not_found("session"))
    }

    fn persist(&self, data: &SessionData) -> Result<(), ApiError> {
        if let Some(dir) = &self.snapshot_dir {
            let bytes = serde_json::to_vec_pretty(data).map_err(|e| ApiError::internal(e.to_string()))?;
            write_atomic(&snapshot_path(dir, &data.id), &bytes).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        Ok(())
    }
}

fn snapshot_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.json"))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/quantities/{name}", put(put_quantity))
        .route("/sessions/{id}/preview", get(get_preview))
        .route("/sessions/{id}/export", get(export_config))
        .with_state(state)
}

pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub x0: Option<f64>,
    pub constraints: Option<ConstraintSet>,
}

async fn create_session(
    State(state): State<AppState>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<SessionData>), ApiError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let (t0, t1, x0) = (req.t0.unwrap_or(5.0), req.t1.unwrap_or(10.0), req.x0.unwrap_or(0.0));
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(ApiError::invalid("t0", "t0 must be > 0"));
    }
    if !(t1 > t0 && t1.is_finite()) {
        return Err(ApiError::invalid("t1", "t1 must exceed t0"));
    }
    if !(x0 >= 0.0 && x0 < t0) {
        return Err(ApiError::invalid("x0", "x0 must lie in [0, t0)"));
    }
    let constraints = req.constraints.unwrap_or_default();
    constraints.validate().map_err(|e| ApiError::invalid("constraints", e.to_string()))?;
    let ts = now();
    let data = SessionData {
        id: uuid::Uuid::new_v4().simple().to_string(),
        t0,
        t1,
        x0,
        constraints,
        quantities: BTreeMap::new(),
        created: ts,
        updated: ts,
    };
    state.persist(&data)?;
    state.sessions.write().await.insert(
        data.id.clone(),
        Arc::new(Mutex::new(Session {
            data: data.clone(),
            previews: HashMap::new(),
        })),
    );
    Ok((StatusCode::CREATED, Json(data)))
}

async fn get_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<SessionData> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    Ok(Json(s.data.clone()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PutQuantity {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    #[serde(default)]
    pub distribution: Option<DistKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResponse {
    pub name: QuantityName,
    pub distribution: FittedDist,
    pub residual: f64,
    pub converged: bool,
}

/// Names the first offending quartile field.
fn check_quartiles(q: &PutQuantity, kind: DistKind) -> Result<(), ApiError> {
    for (field, v) in [("q25", q.q25), ("q50", q.q50), ("q75", q.q75)] {
        if !v.is_finite() {
            return Err(ApiError::invalid(field, format!("{field} must be a finite number")));
        }
    }
    let point = q.q25 == q.q50 && q.q50 == q.q75;
    if !point {
        if !(q.q25 < q.q50) {
            return Err(ApiError::invalid("q50", format!("median {} must exceed lower quartile {}", q.q50, q.q25)));
        }
        if !(q.q50 < q.q75) {
            return Err(ApiError::invalid("q75", format!("upper quartile {} must exceed median {}", q.q75, q.q50)));
        }
    }
    let (lo, hi) = match kind {
        DistKind::Beta => (0.0, 1.0),
        DistKind::ScaledBeta { lower, upper } => (lower, upper),
        DistKind::Normal => (f64::NEG_INFINITY, f64::INFINITY),
    };
    if !(q.q25 > lo) {
        return Err(ApiError::invalid("q25", format!("lower quartile must exceed {lo}")));
    }
    if !(q.q75 < hi) {
        return Err(ApiError::invalid("q75", format!("upper quartile must be below {hi}")));
    }
    Ok(())
}

async fn put_quantity(
    State(state): State<AppState>,
    UrlPath((id, name)): UrlPath<(String, String)>,
    Json(body): Json<PutQuantity>,
) -> ApiResult<FitResponse> {
    let session = state.session(&id).await?;
    let name: QuantityName = name.parse().map_err(|e: CoreError| ApiError::invalid("name", e.to_string()))?;
    let kind = body.distribution.unwrap_or(name.default_kind());
    check_quartiles(&body, kind)?;
    let input = QuantityConfig {
        name,
        q25: body.q25,
        q50: body.q50,
        q75: body.q75,
        distribution: body.distribution,
    };
    let fit = tokio::task::spawn_blocking({
        let input = input.clone();
        move || input.fit()
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| ApiError::invalid("quartiles", e.to_string()))?;
    let (_, report) = fit;

    let mut s = session.lock().await;
    s.data.quantities.insert(
        name,
        QuantityEntry {
            input,
            distribution: report.distribution,
            residual: report.residual,
            converged: report.converged,
        },
    );
    s.data.updated = now();
    s.previews.clear();
    state.persist(&s.data)?;
    Ok(Json(FitResponse {
        name,
        distribution: report.distribution,
        residual: report.residual,
        converged: report.converged,
    }))
}

#[derive(Debug, Clone, Deserialize)]
pub struct PreviewQuery {
    pub family: String,
    #[serde(default)]
    pub seed: u64,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub t: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub count: u64,
    /// Share of all attempts rejected by this check.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub family: ModelFamily,
    pub seed: u64,
    pub n: usize,
    pub acceptance_rate: f64,
    pub draw_efficiency: f64,
    pub attempts: u64,
    /// Median and 5% / 95% bands per arm.
    pub survival: [Vec<BandPoint>; 2],
    /// Lower quartile, median and upper quartile of prior mean survival per arm.
    pub mean_quartiles: [Option<[f64; 3]>; 2],
    pub violations: Vec<Violation>,
}

fn quantiles(mut v: Vec<f64>, ps: &[f64]) -> Option<Vec<f64>> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(ps.iter().map(|&p| elicitsurv_core::math::quantile_sorted(&v, p)).collect())
}

pub fn build_preview(draws: &PriorDraws, seed: u64) -> Preview {
    let n_grid = (PREVIEW_HORIZON / PREVIEW_STEP).round() as usize;
    let grid: Vec<f64> = (0..=n_grid).map(|k| k as f64 * PREVIEW_STEP).collect();
    let survival = Arm::BOTH.map(|arm| {
        grid.iter()
            .filter_map(|&t| {
                let vals = draws.params(arm).filter_map(|p| p.survival(t).ok()).collect();
                let q = quantiles(vals, &[0.5, 0.05, 0.95])?;
                Some(BandPoint {
                    t,
                    median: q[0],
                    lower: q[1],
                    upper: q[2],
                })
            })
            .collect()
    });
    let mean_quartiles = Arm::BOTH.map(|arm| {
        let vals = draws.params(arm).filter_map(|p| p.mean_survival().ok()).filter(|m| m.is_finite()).collect();
        quantiles(vals, &[0.25, 0.5, 0.75]).map(|q| [q[0], q[1], q[2]])
    });
    let violations = draws
        .rejection_counts()
        .filter(|&(_, c)| c > 0)
        .map(|(constraint, count)| Violation {
            constraint,
            count,
            fraction: count as f64 / draws.attempts.max(1) as f64,
        })
        .collect();
    Preview {
        family: draws.family,
        seed,
        n: draws.len(),
        acceptance_rate: draws.acceptance_rate,
        draw_efficiency: draws.draw_efficiency,
        attempts: draws.attempts,
        survival,
        mean_quartiles,
        violations,
    }
}

fn prior_config(data: &SessionData) -> PriorConfig {
    PriorConfig {
        t0: data.t0,
        t1: data.t1,
        x0: data.x0,
        quantities: QuantityName::ALL
            .iter()
            .filter_map(|q| data.quantities.get(q).map(|e| e.input.clone()))
            .collect(),
        constraints: data.constraints,
    }
}

fn require_complete(data: &SessionData) -> Result<(), ApiError> {
    let missing: Vec<&str> =
        QuantityName::ALL.iter().filter(|q| !data.quantities.contains_key(q)).map(|q| q.as_str()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ApiError::new(
            StatusCode::CONFLICT,
            "incomplete",
            Some(missing[0]),
            format!("quantities not yet elicited: {}", missing.join(", ")),
        ))
    }
}

fn core_conflict(e: CoreError) -> ApiError {
    match e {
        CoreError::Infeasible { constraint, .. } => {
            let name = serde_json::to_value(constraint).ok().and_then(|v| v.as_str().map(str::to_string));
            ApiError::new(StatusCode::CONFLICT, "infeasible", name.as_deref(), e.to_string())
        }
        CoreError::Monotonicity { .. } | CoreError::Validation(_) | CoreError::Domain(_) => {
            ApiError::new(StatusCode::CONFLICT, "invalid_spec", None, e.to_string())
        }
        other => ApiError::internal(other.to_string()),
    }
}

async fn get_preview(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<PreviewQuery>,
) -> ApiResult<Preview> {
    let family: ModelFamily = q.family.parse().map_err(|e: CoreError| ApiError::invalid("family", e.to_string()))?;
    let n = q.n.unwrap_or(PREVIEW_DRAWS);
    if n == 0 {
        return Err(ApiError::invalid("n", "n must be >= 1"));
    }
    let session = state.session(&id).await?;
    // Held for the whole computation so operations on one session run in order.
    let mut s = session.lock().await;
    let key = (family, q.seed, n);
    if let Some(p) = s.previews.get(&key) {
        return Ok(Json(p.as_ref().clone()));
    }
    require_complete(&s.data)?;
    let prior = prior_config(&s.data);
    let seed = q.seed;
    let preview = tokio::task::spawn_blocking(move || -> Result<Preview, ApiError> {
        let (spec, _) = prior.build().map_err(|e| ApiError::new(StatusCode::CONFLICT, "invalid_spec", None, e.to_string()))?;
        let draws = sample_prior(family, &spec, n, seed).map_err(core_conflict)?;
        Ok(build_preview(&draws, seed))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let preview = Arc::new(preview);
    s.previews.insert(key, preview.clone());
    Ok(Json(preview.as_ref().clone()))
}

/// A run configuration for the CLI. The dataset is left unset; supply one
/// with `--data` or by editing the file.
async fn export_config(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<RunConfig> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    require_complete(&s.data)?;
    let mut cfg = RunConfig::case_study();
    cfg.dataset = None;
    cfg.prior = prior_config(&s.data);
    cfg.prior.build().map_err(|e| ApiError::new(StatusCode::CONFLICT, "invalid_spec", None, e.to_string()))?;
    Ok(Json(cfg))
}
