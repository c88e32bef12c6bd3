//! HTTP/JSON service over the toolkit.
//!
//! Read endpoints run concurrently. Point-set writes are serialized and
//! persisted to the points file before they become visible. At most one fit
//! runs at a time; a second request while one is in flight gets 409.

mod error;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use bifluxon_core::coherence;
use bifluxon_core::fit;
use bifluxon_core::formats::{
    self, CoherenceFile, Document, FitProblemFile, FitResultFile, FormatError, HeatmapFile, ParamsFile, PointsFile,
    SpectrumModel, SpectrumOverlay, SCHEMA_VERSION,
};
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::sync::RwLock;

pub use error::{ApiError, ErrorBody};

pub const PORT_ENV: &str = "BIFLUXON_PORT";
pub const DEFAULT_PORT: u16 = 8750;
pub const DEFAULT_LEVELS: usize = 6;
pub const DEFAULT_COHERENCE_FLUX: &str = "-0.5:0.5:21";

/// Port from `BIFLUXON_PORT`, falling back to [`DEFAULT_PORT`].
pub fn default_port() -> u16 {
    std::env::var(PORT_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_PORT)
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub heatmap: PathBuf,
    pub points: PathBuf,
    pub params: PathBuf,
    pub host: IpAddr,
    pub port: u16,
}

impl ServiceConfig {
    pub fn new(heatmap: PathBuf, points: PathBuf, params: PathBuf) -> Self {
        ServiceConfig {
            heatmap,
            points,
            params,
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: default_port(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Single-occupancy fit slot; the guard frees it on drop.
#[derive(Debug, Default)]
struct FitSlot(Arc<AtomicBool>);

struct FitGuard(Arc<AtomicBool>);

impl FitSlot {
    fn try_acquire(&self) -> Result<FitGuard, ApiError> {
        self.0
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map(|_| FitGuard(self.0.clone()))
            .map_err(|_| ApiError::FitBusy)
    }
}

impl Drop for FitGuard {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

pub struct AppState {
    heatmap: HeatmapFile,
    params: ParamsFile,
    points_path: PathBuf,
    points: RwLock<PointsFile>,
    fit_slot: FitSlot,
}

impl AppState {
    pub fn new(heatmap: HeatmapFile, params: ParamsFile, points: PointsFile, points_path: PathBuf) -> Self {
        AppState {
            heatmap,
            params,
            points_path,
            points: RwLock::new(points),
            fit_slot: FitSlot::default(),
        }
    }

    /// Loads the files named in `config`; a missing points file starts an
    /// empty set that the first PUT creates.
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let heatmap = HeatmapFile::read(&config.heatmap)?;
        let params = ParamsFile::read(&config.params)?;
        let points = if config.points.exists() {
            PointsFile::read(&config.points)?
        } else {
            PointsFile::new(Vec::new())
        };
        Ok(AppState::new(heatmap, params, points, config.points.clone()))
    }

    pub fn fit_in_progress(&self) -> bool {
        self.fit_slot.0.load(Ordering::Acquire)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/heatmap", get(heatmap))
        .route("/api/spectrum", get(spectrum))
        .route("/api/points", get(get_points).put(put_points))
        .route("/api/fit", post(run_fit))
        .route("/api/coherence", get(coherence_budget))
        .with_state(state)
}

pub async fn serve_on(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::load(&config)?);
    let addr = SocketAddr::new(config.host, config.port);
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Parses a JSON document, naming the offending field on failure.
fn parse_json<D: Document>(bytes: &[u8], field_prefix: &str) -> Result<D, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: D = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = match (field_prefix.is_empty(), path == ".") {
            (true, true) => None,
            (true, false) => Some(path),
            (false, true) => Some(field_prefix.to_string()),
            (false, false) => Some(format!("{field_prefix}.{path}")),
        };
        ApiError::BadRequest {
            field,
            message: e.inner().to_string(),
        }
    })?;
    if doc.schema_version() != SCHEMA_VERSION {
        return Err(ApiError::bad(
            "schema_version",
            format!(
                "unsupported schema_version `{}` (expected `{SCHEMA_VERSION}`)",
                doc.schema_version()
            ),
        ));
    }
    doc.validate()?;
    Ok(doc)
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

fn query_params(state: &AppState, raw: Option<&str>) -> Result<ParamsFile, ApiError> {
    match raw {
        Some(text) => parse_json(text.as_bytes(), "params"),
        None => Ok(state.params.clone()),
    }
}

fn query_range(raw: Option<&str>, default: &str) -> Result<Vec<f64>, ApiError> {
    formats::parse_range(raw.unwrap_or(default)).map_err(|e| ApiError::bad("flux", e.to_string()))
}

async fn heatmap(State(state): State<Arc<AppState>>) -> Json<HeatmapFile> {
    Json(state.heatmap.clone())
}

#[derive(Debug, Deserialize)]
struct SpectrumQuery {
    params: Option<String>,
    flux: Option<String>,
    levels: Option<String>,
    model: Option<String>,
}

async fn spectrum(
    State(state): State<Arc<AppState>>,
    Query(q): Query<SpectrumQuery>,
) -> Result<Json<SpectrumOverlay>, ApiError> {
    let params = query_params(&state, q.params.as_deref())?;
    let grid = match q.flux.as_deref() {
        Some(r) => query_range(Some(r), "")?,
        None => state.heatmap.flux.clone(),
    };
    let levels = match q.levels.as_deref() {
        Some(s) => s
            .parse::<usize>()
            .map_err(|_| ApiError::bad("levels", format!("expected a positive integer, got `{s}`")))?,
        None => DEFAULT_LEVELS,
    };
    let model: SpectrumModel = q.model.as_deref().unwrap_or("exact").parse()?;
    blocking(move || {
        let table = formats::params_spectrum(&params, model, &grid, levels)?;
        Ok(Json(SpectrumOverlay::from_table(model, &table)))
    })
    .await
}

async fn get_points(State(state): State<Arc<AppState>>) -> Json<PointsFile> {
    Json(state.points.read().await.clone())
}

async fn put_points(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<PointsFile>, ApiError> {
    let doc: PointsFile = parse_json(&body, "")?;
    let mut current = state.points.write().await;
    let path = state.points_path.clone();
    let stored = doc.clone();
    blocking(move || stored.write(&path).map_err(ApiError::from)).await?;
    *current = doc.clone();
    Ok(Json(doc))
}

async fn run_fit(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<FitResultFile>, ApiError> {
    let request: FitProblemFile = parse_json(&body, "")?;
    let guard = state.fit_slot.try_acquire()?;
    blocking(move || {
        // held until the fit ends even if the client goes away
        let _guard = guard;
        Ok(Json(FitResultFile::new(fit::fit(&request.problem)?)))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct CoherenceQuery {
    params: Option<String>,
    flux: Option<String>,
}

async fn coherence_budget(
    State(state): State<Arc<AppState>>,
    Query(q): Query<CoherenceQuery>,
) -> Result<Json<CoherenceFile>, ApiError> {
    let params = query_params(&state, q.params.as_deref())?;
    let grid = query_range(q.flux.as_deref(), DEFAULT_COHERENCE_FLUX)?;
    blocking(move || {
        let budget = coherence::coherence_budget(
            &params.circuit(0.0)?,
            &params.resonator_params()?,
            &params.noise_params()?,
            &grid,
        )?;
        let file = CoherenceFile::new(budget.rows);
        file.validate()?;
        Ok(Json(file))
    })
    .await
}
