//! HTTP layer for interactive contrastive MCA.
//!
//! The dataset is fixed for the life of the process. Fits are pure functions
//! of their parameters, so responses are cached by parameter set and
//! concurrent requests for the same parameters share one computation.

pub mod api;

use std::collections::HashMap;
use std::future::IntoFuture;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cmca_core::alpha::AutoAlphaConfig;
use cmca_core::cmca::top_variables;
use cmca_core::dataio::{CategoricalTable, CategoryVocabulary};
use cmca_core::encode::Normalization;
use cmca_core::pipeline::{AlphaChoice, ContrastSetup};
use cmca_core::{Error, ErrorClass};
use tokio::sync::OnceCell;
use tower_http::services::ServeDir;

use api::*;

/// Cache keys and fits use α rounded to this many steps per unit.
pub const ALPHA_RESOLUTION: f64 = 1e6;

/// The loaded dataset and its full-table vocabulary.
#[derive(Debug)]
pub struct Dataset {
    pub table: CategoricalTable,
    pub vocab: CategoryVocabulary,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct FitKey {
    target: String,
    background: String,
    /// None for auto.
    alpha_micros: Option<i64>,
    k_prime: usize,
    normalization: Normalization,
    auto: Option<(u64, u64, usize)>,
    top_n: usize,
}

#[derive(Debug, Clone)]
struct Cached {
    status: StatusCode,
    body: Bytes,
}

impl IntoResponse for Cached {
    fn into_response(self) -> Response {
        (
            self.status,
            [(header::CONTENT_TYPE, "application/json")],
            self.body,
        )
            .into_response()
    }
}

/// Shared server state.
#[derive(Debug, Default)]
pub struct AppState {
    dataset: OnceLock<Arc<Dataset>>,
    cache: Mutex<HashMap<FitKey, Arc<OnceCell<Cached>>>>,
    computed: AtomicUsize,
}

impl AppState {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    /// Installs the dataset. Only the first call has any effect.
    pub fn install(&self, table: CategoricalTable) -> bool {
        let vocab = CategoryVocabulary::from_table(&table);
        self.dataset.set(Arc::new(Dataset { table, vocab })).is_ok()
    }

    pub fn dataset(&self) -> Option<Arc<Dataset>> {
        self.dataset.get().cloned()
    }

    /// Number of fits actually computed, as opposed to served from cache.
    pub fn fits_computed(&self) -> usize {
        self.computed.load(Ordering::SeqCst)
    }
}

pub fn router(state: Arc<AppState>, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/meta", get(meta))
        .route("/api/fit", post(fit))
        .route("/api/sweep", post(sweep))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug)]
pub enum ServeError {
    Io(std::io::Error),
    Load(Error),
}

impl std::fmt::Display for ServeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServeError::Io(e) => write!(f, "{e}"),
            ServeError::Load(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ServeError {}

/// Binds `addr`, loads the dataset in the background and serves until the
/// process is stopped. Requests that arrive before loading finishes get 503.
pub async fn run<F>(addr: SocketAddr, assets: Option<PathBuf>, load: F) -> Result<(), ServeError>
where
    F: FnOnce() -> cmca_core::Result<CategoricalTable> + Send + 'static,
{
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(ServeError::Io)?;
    let state = AppState::new();
    let app = router(state.clone(), assets);
    eprintln!(
        "listening on http://{}",
        listener.local_addr().map_err(ServeError::Io)?
    );

    let loader = tokio::task::spawn_blocking(load);
    let server = axum::serve(listener, app).into_future();
    tokio::pin!(server);
    tokio::select! {
        res = &mut server => return res.map_err(ServeError::Io),
        loaded = loader => {
            let table = loaded
                .map_err(|e| ServeError::Io(std::io::Error::other(e)))?
                .map_err(ServeError::Load)?;
            eprintln!("loaded {} rows", table.n_rows());
            state.install(table);
        }
    }
    server.await.map_err(ServeError::Io)
}

fn json_response<T: serde::Serialize>(status: StatusCode, value: &T) -> Cached {
    let body = serde_json::to_vec(value).expect("response bodies serialize");
    Cached {
        status,
        body: Bytes::from(body),
    }
}

fn error_response(status: StatusCode, kind: &str, message: String) -> Cached {
    json_response(
        status,
        &ErrorBody {
            error: kind.to_string(),
            message,
            trace: None,
        },
    )
}

fn from_error(e: Error) -> Cached {
    let status = match e.class() {
        ErrorClass::Data => StatusCode::BAD_REQUEST,
        ErrorClass::Numerical => StatusCode::UNPROCESSABLE_ENTITY,
    };
    let message = e.to_string();
    let kind = e.kind().to_string();
    let trace = match e {
        Error::NonconvergenceWithinBudget { trace, .. } => Some(*trace),
        _ => None,
    };
    json_response(
        status,
        &ErrorBody {
            error: kind,
            message,
            trace,
        },
    )
}

fn not_ready() -> Cached {
    error_response(
        StatusCode::SERVICE_UNAVAILABLE,
        "NotReady",
        "dataset is still loading".into(),
    )
}

fn bad_body(rejection: JsonRejection) -> Cached {
    error_response(StatusCode::BAD_REQUEST, "BadRequest", rejection.body_text())
}

async fn meta(State(state): State<Arc<AppState>>) -> Cached {
    let Some(ds) = state.dataset() else {
        return not_ready();
    };
    let t = &ds.table;
    json_response(
        StatusCode::OK,
        &MetaResponse {
            group_column: t.group_column().to_string(),
            rows: t.n_rows(),
            groups: t.group_counts(),
            group_order: t.group_labels(),
            variables: t
                .schemas()
                .iter()
                .map(|s| VariableMeta {
                    name: s.name.clone(),
                    levels: s.levels.clone(),
                })
                .collect(),
        },
    )
}

fn rounded_alpha(alpha: f64) -> Result<(i64, f64), Cached> {
    if !alpha.is_finite() || alpha.abs() > 1e12 {
        return Err(error_response(
            StatusCode::BAD_REQUEST,
            "InvalidArgument",
            format!("alpha {alpha} is out of range"),
        ));
    }
    let micros = (alpha * ALPHA_RESOLUTION).round() as i64;
    Ok((micros, micros as f64 / ALPHA_RESOLUTION))
}

fn fit_key(req: &FitRequest) -> Result<(FitKey, AlphaChoice), Cached> {
    let (alpha_micros, auto, choice) = match req.alpha {
        AlphaParam::Value(a) => {
            let (micros, a) = rounded_alpha(a)?;
            (Some(micros), None, AlphaChoice::Fixed(a))
        }
        AlphaParam::Keyword(AlphaKeyword::Auto) => {
            let d = AutoAlphaConfig::default();
            let cfg = AutoAlphaConfig {
                epsilon: req.epsilon.unwrap_or(d.epsilon),
                tol: req.tol.unwrap_or(d.tol),
                max_iter: req.max_iter.unwrap_or(d.max_iter),
            };
            (
                None,
                Some((cfg.epsilon.to_bits(), cfg.tol.to_bits(), cfg.max_iter)),
                AlphaChoice::Auto(cfg),
            )
        }
    };
    let key = FitKey {
        target: req.target.clone(),
        background: req.background.clone(),
        alpha_micros,
        k_prime: req.k_prime,
        normalization: req.normalization,
        auto,
        top_n: req.top_n,
    };
    Ok((key, choice))
}

/// Computes the full fit response for one parameter set.
pub fn compute_fit(
    ds: &Dataset,
    target: &str,
    background: &str,
    alpha: AlphaChoice,
    k_prime: usize,
    normalization: Normalization,
    top_n: usize,
) -> cmca_core::Result<FitResponse> {
    let setup = ContrastSetup::new(&ds.table, target, background, normalization)?;
    let fit = setup.fit(alpha, k_prime)?;
    let categories = fit.category_coordinates(&setup)?;
    let loadings = fit.loadings(&setup)?;
    if top_n == 0 {
        return Err(Error::InvalidArgument("top_n must be at least 1".into()));
    }
    let n = top_n.min(loadings.variables().len());

    let mut rows = Vec::with_capacity(fit.target_rows.nrows() + fit.background_rows.nrows());
    for (group, role, coords) in [
        (&setup.target, Role::Target, &fit.target_rows),
        (&setup.background, Role::Background, &fit.background_rows),
    ] {
        for (r, row) in coords.row_iter().enumerate() {
            rows.push(RowPoint {
                row_id: group.table.row_id(r),
                group: group.label.clone(),
                role,
                coords: row.iter().copied().collect(),
            });
        }
    }
    let entries = setup.vocab.entries();
    let top = (0..fit.model.k_prime())
        .map(|j| {
            top_variables(&loadings, j, n).map(|ranked| {
                ranked
                    .into_iter()
                    .map(|(variable, total)| RankedVariable { variable, total })
                    .collect()
            })
        })
        .collect::<cmca_core::Result<Vec<_>>>()?;

    Ok(FitResponse {
        target: target.to_string(),
        background: background.to_string(),
        normalization,
        k_prime,
        alpha: fit.model.alpha(),
        eigenvalues: fit.model.eigenvalues().to_vec(),
        rows,
        categories: entries
            .iter()
            .enumerate()
            .map(|(k, (variable, level))| CategoryPoint {
                variable: variable.clone(),
                level: level.clone(),
                zero_frequency: categories.zero_frequency[k],
                coords: categories.values.row(k).iter().copied().collect(),
            })
            .collect(),
        loadings: entries
            .iter()
            .enumerate()
            .map(|(k, (variable, level))| CategoryLoading {
                variable: variable.clone(),
                level: level.clone(),
                loadings: loadings.per_category().row(k).iter().copied().collect(),
            })
            .collect(),
        variable_totals: loadings
            .variables()
            .iter()
            .enumerate()
            .map(|(v, name)| VariableTotal {
                variable: name.clone(),
                totals: loadings
                    .per_variable_total()
                    .row(v)
                    .iter()
                    .copied()
                    .collect(),
            })
            .collect(),
        top_variables: top,
        trace: fit.trace,
    })
}

async fn fit(
    State(state): State<Arc<AppState>>,
    body: Result<Json<FitRequest>, JsonRejection>,
) -> Cached {
    let Some(ds) = state.dataset() else {
        return not_ready();
    };
    let req = match body {
        Ok(Json(req)) => req,
        Err(rejection) => return bad_body(rejection),
    };
    let (key, choice) = match fit_key(&req) {
        Ok(k) => k,
        Err(resp) => return resp,
    };
    let cell = {
        let mut cache = state.cache.lock().expect("cache lock");
        cache.entry(key).or_default().clone()
    };
    cell.get_or_init(|| {
        let state = state.clone();
        async move {
            let job = tokio::task::spawn_blocking(move || {
                state.computed.fetch_add(1, Ordering::SeqCst);
                compute_fit(
                    &ds,
                    &req.target,
                    &req.background,
                    choice,
                    req.k_prime,
                    req.normalization,
                    req.top_n,
                )
            });
            match job.await {
                Ok(Ok(resp)) => json_response(StatusCode::OK, &resp),
                Ok(Err(e)) => from_error(e),
                Err(e) => {
                    error_response(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
                }
            }
        }
    })
    .await
    .clone()
}

/// Per-α summaries over a grid, in grid order.
pub fn compute_sweep(ds: &Dataset, req: &SweepRequest) -> cmca_core::Result<SweepResponse> {
    let setup = ContrastSetup::new(&ds.table, &req.target, &req.background, req.normalization)?;
    let points = setup
        .sweep(&req.grid, req.k_prime)?
        .into_iter()
        .map(|p| match p.outcome {
            Ok((_, s)) => SweepEntry {
                alpha: p.alpha,
                status: PointStatus::Ok,
                lambda1: Some(s.lambda1),
                lambda2: s.lambda2,
                target_variance: Some(s.target_variance),
                background_variance: Some(s.background_variance),
                error: None,
                message: None,
            },
            Err(e) => SweepEntry {
                alpha: p.alpha,
                status: PointStatus::Failed,
                lambda1: None,
                lambda2: None,
                target_variance: None,
                background_variance: None,
                error: Some(e.kind().to_string()),
                message: Some(e.to_string()),
            },
        })
        .collect();
    Ok(SweepResponse {
        target: req.target.clone(),
        background: req.background.clone(),
        normalization: req.normalization,
        k_prime: req.k_prime,
        points,
    })
}

async fn sweep(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SweepRequest>, JsonRejection>,
) -> Cached {
    let Some(ds) = state.dataset() else {
        return not_ready();
    };
    let req = match body {
        Ok(Json(req)) => req,
        Err(rejection) => return bad_body(rejection),
    };
    match tokio::task::spawn_blocking(move || compute_sweep(&ds, &req)).await {
        Ok(Ok(resp)) => json_response(StatusCode::OK, &resp),
        Ok(Err(e)) => from_error(e),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()),
    }
}
