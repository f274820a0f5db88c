//! HTTP surface: search with optional grounded answers, cohort jobs,
//! report transformation, IHC recommendation and report lookup.

mod config;
mod jobs;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

pub use config::{CohortDefaults, EncoderBackend, EngineConfig};
pub use jobs::{JobHandle, JobKind, JobRegistry, JobState, JobStatus, Progress};

use crate::error::Error;
use crate::ingest::{MarkerLexicon, ReportDoc};
use crate::rag::{
    case_prompt, generate, recommend_ihc_for_report, run_cohort, transform_report, write_cohort_results, CohortSpec,
    IhcRecommendation, LlmClient, Prefilter, Rendering,
};
use crate::retrieval::{Engine, FusionWeights, RankedHit, SearchRequest};

/// JSON error body `{code, message}` with its status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::EmptyDocument | Error::EmptyInput(_) => (StatusCode::BAD_REQUEST, "empty_input"),
            Error::InvalidInput(_) => (StatusCode::BAD_REQUEST, "invalid_input"),
            Error::InvalidConfig(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::ProviderUnavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "provider_unavailable"),
            Error::BudgetExhausted { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "budget_exhausted"),
            Error::UnmaskedInput(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unmasked_input"),
            Error::EmptyCandidateSet => (StatusCode::UNPROCESSABLE_ENTITY, "empty_candidate_set"),
            Error::InvalidCase { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_case"),
            Error::ParseFailure(_) | Error::DimensionMismatch { .. } => (StatusCode::BAD_GATEWAY, "bad_provider_output"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { code: self.code.into(), message: self.message })).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// `Json` whose rejections use the service error body.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(r) => Err(ApiError::new(r.status(), "invalid_body", r.body_text())),
        }
    }
}

#[derive(Debug)]
struct Inner {
    engine: Engine,
    llm: Option<Arc<dyn LlmClient>>,
    cfg: EngineConfig,
    lexicon: MarkerLexicon,
    jobs: JobRegistry,
    job_slots: Arc<Semaphore>,
}

/// Shared, immutable engine plus the job registry.
#[derive(Debug, Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(engine: Engine, llm: Option<Arc<dyn LlmClient>>, cfg: EngineConfig) -> crate::Result<Self> {
        cfg.validate()?;
        let slots = cfg.cohort.max_running_jobs;
        Ok(AppState {
            inner: Arc::new(Inner {
                engine,
                llm,
                cfg,
                lexicon: MarkerLexicon::default(),
                jobs: JobRegistry::new(),
                job_slots: Arc::new(Semaphore::new(slots)),
            }),
        })
    }

    /// Loads corpus and indices from the configured directories and connects
    /// the configured encoder and (if an endpoint is set) LLM.
    pub fn from_config(cfg: EngineConfig) -> crate::Result<Self> {
        cfg.validate_paths()?;
        let engine = cfg.open_engine()?;
        let llm = cfg.llm_client()?;
        AppState::new(engine, llm, cfg)
    }

    pub fn engine(&self) -> &Engine {
        &self.inner.engine
    }

    pub fn config(&self) -> &EngineConfig {
        &self.inner.cfg
    }

    pub fn jobs(&self) -> &JobRegistry {
        &self.inner.jobs
    }

    fn llm(&self) -> ApiResult<Arc<dyn LlmClient>> {
        self.inner.llm.clone().ok_or_else(|| {
            ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "llm_unavailable", "no LLM endpoint is configured (LLM_URL)")
        })
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> crate::Result<T> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", format!("worker failed: {e}"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub reports: usize,
    pub chunks: usize,
    pub llm_configured: bool,
}

async fn healthz(State(st): State<AppState>) -> Json<Health> {
    let corpus = st.engine().corpus();
    Json(Health {
        status: "ok".into(),
        reports: corpus.len(),
        chunks: corpus.chunks().len(),
        llm_configured: st.inner.llm.is_some(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchBody {
    pub query: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub generate: bool,
    #[serde(default)]
    pub weights: Option<FusionWeights>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<RankedHit>,
    pub answer: Option<String>,
    pub warning: Option<String>,
}

async fn search(State(st): State<AppState>, ApiJson(body): ApiJson<SearchBody>) -> ApiResult<Json<SearchResponse>> {
    if body.query.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty_query", "query must not be empty"));
    }
    let k = body.k.unwrap_or(st.config().rag.top_k);
    if k < 1 {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_k", "k must be at least 1"));
    }
    let weights = body.weights.unwrap_or(st.config().weights);
    let req = SearchRequest::new(body.query.clone(), k).with_weights(weights).with_k_backend(st.config().k_backend.max(k));
    let s = st.clone();
    let hits = blocking(move || s.engine().search(&req)).await?;
    if !body.generate {
        return Ok(Json(SearchResponse { hits, answer: None, warning: None }));
    }
    let Some(llm) = st.inner.llm.clone() else {
        let warning = Some("generation requested but no LLM endpoint is configured".to_string());
        return Ok(Json(SearchResponse { hits, answer: None, warning }));
    };
    let (s, h, q) = (st.clone(), hits.clone(), body.query);
    let answer = blocking(move || {
        let cfg = &s.config().rag;
        let prompt = case_prompt(s.engine(), &h, &q, cfg)?;
        generate(&prompt, llm.as_ref(), &cfg.generation, cfg.context_budget)
    })
    .await;
    Ok(Json(match answer {
        Ok(a) => SearchResponse { hits, answer: Some(a), warning: None },
        Err(e) => SearchResponse { hits, answer: None, warning: Some(format!("answer unavailable: {}", e.message)) },
    }))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CohortBody {
    #[serde(default)]
    pub inclusion_criteria: String,
    #[serde(default)]
    pub exclusion_criteria: String,
    #[serde(default)]
    pub prefilter: Option<Prefilter>,
    #[serde(default)]
    pub concurrency: Option<usize>,
}

async fn submit_cohort(
    State(st): State<AppState>,
    ApiJson(body): ApiJson<CohortBody>,
) -> ApiResult<(StatusCode, Json<JobHandle>)> {
    let spec = CohortSpec {
        inclusion_criteria: body.inclusion_criteria,
        exclusion_criteria: body.exclusion_criteria,
        prefilter: body.prefilter,
        concurrency: body.concurrency.unwrap_or(st.config().cohort.concurrency),
    };
    spec.validate().map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_criteria", e.to_string()))?;
    let llm = st.llm()?;
    let handle = st.jobs().create(spec.clone());
    let id = handle.job_id.clone();
    let s = st.clone();
    tokio::spawn(async move {
        let Ok(_permit) = s.inner.job_slots.clone().acquire_owned().await else { return };
        s.jobs().start(&id);
        let (s2, id2) = (s.clone(), id.clone());
        let result = blocking(move || {
            let jobs = s2.jobs().clone();
            let engine = s2.engine();
            let progress = |done, total| jobs.progress(&id2, done, total);
            let outcome = run_cohort(&spec, engine.corpus(), Some(engine), llm.as_ref(), &s2.config().rag, &progress)?;
            let path = match &s2.config().jobs_dir {
                Some(dir) => {
                    let dir = dir.join(&id2);
                    write_cohort_results(&dir, &outcome)?;
                    Some(dir)
                }
                None => None,
            };
            Ok((outcome, path))
        })
        .await;
        match result {
            Ok((outcome, path)) => s.jobs().finish(&id, outcome, path),
            Err(e) => s.jobs().fail(&id, e.message),
        }
    });
    Ok((StatusCode::ACCEPTED, Json(handle)))
}

async fn cohort_status(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JobStatus>> {
    st.jobs()
        .get(&id)
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "job_not_found", format!("no cohort job {id}")))
}

fn report(st: &AppState, id: &str) -> ApiResult<ReportDoc> {
    st.engine()
        .corpus()
        .doc(id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "report_not_found", format!("no report {id}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformBody {
    pub report_id: String,
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformResponse {
    pub report_id: String,
    pub kind: Rendering,
    pub text: String,
}

async fn transform(
    State(st): State<AppState>,
    ApiJson(body): ApiJson<TransformBody>,
) -> ApiResult<Json<TransformResponse>> {
    let kind: Rendering = body.kind.parse().map_err(|e: Error| {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_kind", e.to_string())
    })?;
    let doc = report(&st, &body.report_id)?;
    let llm = st.llm()?;
    let s = st.clone();
    let text = blocking(move || transform_report(&doc, kind, llm.as_ref(), &s.config().rag)).await?;
    Ok(Json(TransformResponse { report_id: body.report_id, kind, text }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IhcBody {
    pub report_id: String,
    #[serde(default)]
    pub k: Option<usize>,
}

async fn ihc(State(st): State<AppState>, ApiJson(body): ApiJson<IhcBody>) -> ApiResult<Json<IhcRecommendation>> {
    let k = body.k.unwrap_or(st.config().rag.top_k);
    if k < 1 {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_k", "k must be at least 1"));
    }
    let doc = report(&st, &body.report_id)?;
    let llm = st.llm()?;
    let s = st.clone();
    let rec = blocking(move || {
        recommend_ihc_for_report(&doc, s.engine(), llm.as_ref(), k, &s.inner.lexicon, &s.config().rag)
    })
    .await?;
    Ok(Json(rec))
}

async fn get_report(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ReportDoc>> {
    report(&st, &id).map(Json)
}

async fn require_token(State(st): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &st.config().api_token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/v1/search", post(search))
        .route("/v1/cohorts", post(submit_cohort))
        .route("/v1/cohorts/{id}", get(cohort_status))
        .route("/v1/transform", post(transform))
        .route("/v1/ihc", post(ihc))
        .route("/v1/reports/{id}", get(get_report))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/healthz", get(healthz))
        .merge(api)
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
        })
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds `addr` and serves on a new multi-threaded runtime.
pub fn run_blocking(state: AppState, addr: SocketAddr) -> crate::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("tokio runtime", e))?;
    rt.block_on(async move {
        let listener = TcpListener::bind(addr).await.map_err(|e| Error::io(addr.to_string(), e))?;
        serve(listener, state).await.map_err(|e| Error::io(addr.to_string(), e))
    })
}
