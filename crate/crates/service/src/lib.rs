//! HTTP JSON API over the cost model: single scenarios, coverage surfaces
//! and latitude sweeps on the synthetic climate.
//!
//! Every quantity in a response is `{"value": .., "unit": ..}`. Errors are
//! `{"errors": [{"field": .., "message": ..}]}` with status 400 for values
//! outside their domain and 422 for fields that cannot be combined.

pub mod error;
pub mod evaluate;
pub mod surface;
pub mod sweep;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use pvtrade_core::geo::anchors::AnchorTable;
use pvtrade_core::geo::eval::BaseloadChoice;
use pvtrade_core::geo::synthetic::SyntheticClimate;
use pvtrade_core::presets::CostPreset;
use pvtrade_core::{BaseloadBackupCost, ModelError, TradeRegime};

pub use error::{ApiError, FieldError};
pub use evaluate::{evaluate, ScenarioRequest, ScenarioResponse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static str,
}

impl Quantity {
    pub fn new(value: f64, unit: &'static str) -> Self {
        Self { value, unit }
    }

    pub fn usd_mwh(value: f64) -> Self {
        Self::new(value, "USD/MWh")
    }

    /// Dimensionless.
    pub fn ratio(value: f64) -> Self {
        Self::new(value, "1")
    }

    pub fn degrees(value: f64) -> Self {
        Self::new(value, "deg")
    }
}

/// Array of values sharing one unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub values: Vec<f64>,
    pub unit: &'static str,
}

/// Startup configuration. Paths left `None` use the bundled data.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub anchors: Option<PathBuf>,
    /// JSON object mapping names to a preset name or `{fixed_annual, variable_unit}`.
    pub presets: Option<PathBuf>,
    /// Directory served for paths outside `/v1`.
    pub static_dir: Option<PathBuf>,
}

impl ServiceConfig {
    /// Reads `PVTRADE_ANCHORS`, `PVTRADE_PRESETS` and `PVTRADE_STATIC`.
    pub fn from_env() -> Self {
        let path = |k: &str| std::env::var_os(k).map(PathBuf::from);
        Self {
            anchors: path("PVTRADE_ANCHORS"),
            presets: path("PVTRADE_PRESETS"),
            static_dir: path("PVTRADE_STATIC"),
        }
    }
}

/// Immutable data shared by all requests.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceState {
    pub anchors: AnchorTable,
    pub climate: SyntheticClimate,
    pub presets: BTreeMap<String, BaseloadBackupCost>,
}

impl Default for ServiceState {
    fn default() -> Self {
        Self {
            anchors: AnchorTable::bundled(),
            climate: SyntheticClimate::default(),
            presets: builtin_presets(),
        }
    }
}

fn builtin_presets() -> BTreeMap<String, BaseloadBackupCost> {
    CostPreset::ALL.iter().map(|p| (p.as_str().to_string(), p.baseload())).collect()
}

/// Parses a presets file; entries extend (or replace) the built-in ones.
pub fn parse_presets(text: &str) -> Result<BTreeMap<String, BaseloadBackupCost>, ModelError> {
    let entries: BTreeMap<String, BaseloadChoice> =
        serde_json::from_str(text).map_err(|e| ModelError::Data(format!("presets: {e}")))?;
    let mut out = builtin_presets();
    for (name, choice) in entries {
        out.insert(name.to_lowercase(), choice.resolve()?);
    }
    Ok(out)
}

impl ServiceState {
    pub fn load(config: &ServiceConfig) -> Result<Self, ModelError> {
        let mut state = Self::default();
        if let Some(p) = &config.anchors {
            state.anchors = AnchorTable::load(p)?;
        }
        if let Some(p) = &config.presets {
            let text = std::fs::read_to_string(p).map_err(|e| ModelError::Data(format!("{}: {e}", p.display())))?;
            state.presets = parse_presets(&text)?;
        }
        Ok(state)
    }

    /// Case-insensitive; also accepts the table column names.
    pub fn preset(&self, name: &str) -> Option<BaseloadBackupCost> {
        let name = name.to_lowercase();
        self.presets
            .get(&name)
            .copied()
            .or_else(|| name.parse::<CostPreset>().ok().and_then(|p| self.presets.get(p.as_str()).copied()))
    }

    pub fn preset_names(&self) -> Vec<&str> {
        self.presets.keys().map(String::as_str).collect()
    }
}

type Shared = Arc<ServiceState>;

pub fn router(state: ServiceState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/presets", get(presets))
        .route("/v1/evaluate", post(evaluate_handler))
        .route("/v1/surface", get(surface_handler))
        .route("/v1/latitude-sweep", get(sweep_handler))
        .with_state(Arc::new(state));
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(CorsLayer::permissive())
}

/// Binds `addr` and serves until ctrl-c. Bind failures (port in use,
/// address not available) come back as the error.
pub async fn serve(addr: SocketAddr, state: ServiceState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, state, static_dir).await
}

pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: ServiceState,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let app = router(state, static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok", "version": env!("CARGO_PKG_VERSION")}))
}

#[derive(Debug, Clone, Serialize)]
pub struct PresetView {
    pub name: String,
    pub baseload: evaluate::BaseloadView,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleRequest {
    pub name: &'static str,
    pub request: ScenarioRequest,
}

#[derive(Debug, Clone, Serialize)]
pub struct PresetsResponse {
    pub presets: Vec<PresetView>,
    pub regimes: Vec<TradeRegime>,
    pub examples: Vec<ExampleRequest>,
}

/// Ready-made requests for the UI.
pub fn example_requests() -> Vec<ExampleRequest> {
    vec![
        ExampleRequest {
            name: "central / global",
            request: ScenarioRequest {
                latitude: Some(0.0),
                preset: Some("high".into()),
                regimes: Some(vec![TradeRegime::Global]),
                ..Default::default()
            },
        },
        ExampleRequest {
            name: "central / 40 deg",
            request: ScenarioRequest { latitude: Some(40.0), preset: Some("high".into()), ..Default::default() },
        },
        ExampleRequest {
            name: "cost ratio / w = 0.5",
            request: ScenarioRequest { w: Some(0.5), k: Some(0.5), ratio: Some(0.6), ..Default::default() },
        },
    ]
}

async fn presets(State(state): State<Shared>) -> Json<PresetsResponse> {
    Json(PresetsResponse {
        presets: state
            .presets
            .iter()
            .map(|(name, bb)| PresetView { name: name.clone(), baseload: bb.into() })
            .collect(),
        regimes: TradeRegime::ALL.to_vec(),
        examples: example_requests(),
    })
}

async fn evaluate_handler(State(state): State<Shared>, body: Bytes) -> Result<Json<ScenarioResponse>, ApiError> {
    let req: ScenarioRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad("body", e.to_string()))?;
    evaluate(&req, &state).map(Json)
}

type Params = Query<BTreeMap<String, String>>;

async fn surface_handler(State(_): State<Shared>, Query(q): Params) -> Result<Json<surface::Surface>, ApiError> {
    let req = surface::SurfaceRequest::from_query(&q)?;
    surface::surface(&req).map(Json)
}

async fn sweep_handler(State(state): State<Shared>, Query(q): Params) -> Result<Response, ApiError> {
    let req = sweep::SweepRequest::from_query(&q, &state)?;
    let out = sweep::sweep(&req, &state)?;
    Ok(match req.format {
        sweep::Format::Json => Json(out).into_response(),
        sweep::Format::Csv => (StatusCode::OK, [(header::CONTENT_TYPE, "text/csv; charset=utf-8")], out.to_csv()).into_response(),
    })
}

/// Query-string helpers shared by the GET endpoints.
pub(crate) mod query {
    use std::collections::BTreeMap;
    use std::str::FromStr;

    use crate::ApiError;

    pub fn reject_unknown(q: &BTreeMap<String, String>, known: &[&str]) -> Result<(), ApiError> {
        match q.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(ApiError::bad(k.clone(), format!("unknown parameter; known: {}", known.join(", ")))),
            None => Ok(()),
        }
    }

    pub fn parse<T: FromStr>(q: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ApiError> {
        q.get(key)
            .map(|s| s.trim().parse::<T>().map_err(|_| ApiError::bad(key, format!("cannot parse '{s}'"))))
            .transpose()
    }

    pub fn float(q: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, ApiError> {
        match parse::<f64>(q, key)? {
            Some(x) if !x.is_finite() => Err(ApiError::bad(key, "must be a finite number")),
            v => Ok(v),
        }
    }
}
