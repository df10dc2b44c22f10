//! HTTP front end for navigation sessions.
//!
//! Each session is a single-writer state machine behind a mutex. Ticks run
//! on the blocking pool; every snapshot they produce is serialized once and
//! fanned out to stream subscribers through a broadcast channel, while the
//! latest one is kept in a watch channel for cheap reads.

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use langnav_core::session::{
    AssetStore, EventLog, InstructionEvent, RunMode, Session, SessionError, SessionSpec, Snapshot,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;
use tokio::sync::{broadcast, watch};
use tokio::task::JoinHandle;

/// Bind address used when neither a port nor `LANGNAV_ADDR` is given.
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const ADDR_ENV: &str = "LANGNAV_ADDR";
const STREAM_BUFFER: usize = 4096;
const MAX_TICKS_PER_REQUEST: u64 = 100_000;

/// `LANGNAV_ADDR` if set and valid, else [`DEFAULT_ADDR`].
pub fn addr_from_env() -> Result<SocketAddr, String> {
    let raw = std::env::var(ADDR_ENV).unwrap_or_else(|_| DEFAULT_ADDR.to_owned());
    raw.parse().map_err(|e| format!("{ADDR_ENV}={raw:?}: {e}"))
}

/// A snapshot plus its JSON encoding, shared by every subscriber.
#[derive(Debug)]
pub struct Published {
    pub tick: u64,
    pub json: String,
}

impl Published {
    fn new(s: &Snapshot) -> Arc<Self> {
        Arc::new(Self {
            tick: s.tick,
            json: serde_json::to_string(s).expect("snapshot serializes"),
        })
    }
}

struct SessionHandle {
    session: Mutex<Session>,
    latest: watch::Sender<Arc<Published>>,
    stream: broadcast::Sender<Arc<Published>>,
    ticker: Mutex<Option<JoinHandle<()>>>,
}

impl SessionHandle {
    /// Run `f` under the session lock and publish what it returns.
    fn with_session<R>(&self, f: impl FnOnce(&mut Session) -> (R, Vec<Snapshot>)) -> R {
        let mut s = self.session.lock().expect("session lock");
        let (r, snaps) = f(&mut s);
        for snap in &snaps {
            let p = Published::new(snap);
            let _ = self.stream.send(p.clone());
            self.latest.send_replace(p);
        }
        if snaps.is_empty() {
            self.latest.send_replace(Published::new(&s.snapshot()));
        }
        r
    }

    fn stop_ticker(&self) {
        if let Some(h) = self.ticker.lock().expect("ticker lock").take() {
            h.abort();
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    assets: AssetStore,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(assets: AssetStore) -> Self {
        Self {
            inner: Arc::new(Inner {
                assets,
                sessions: RwLock::new(HashMap::new()),
                next_id: AtomicU64::new(1),
            }),
        }
    }

    fn get(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.inner
            .sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session {id:?}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::UnknownAsset { .. } => StatusCode::NOT_FOUND,
            SessionError::BadAsset { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::InvalidConfig(_) | SessionError::InvalidMode(_) | SessionError::Schema(_) => {
                StatusCode::BAD_REQUEST
            }
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/maps", get(list_maps))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/instruction", post(submit_instruction))
        .route("/sessions/{id}/tick", post(tick))
        .route("/sessions/{id}/mode", post(set_mode))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/costmap", get(costmap))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/stream", get(stream_snapshots))
        .with_state(state)
}

/// Serve until the process is stopped.
pub async fn serve(assets: AssetStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(assets))).await
}

async fn list_maps(State(app): State<AppState>) -> Json<Vec<String>> {
    Json(app.inner.assets.list_maps())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub snapshot: Snapshot,
}

async fn create_session(State(app): State<AppState>, Json(spec): Json<SessionSpec>) -> Result<Response, ApiError> {
    let assets = app.inner.assets.clone();
    let session = tokio::task::spawn_blocking(move || Session::create(spec, &assets))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let snapshot = session.snapshot();
    let (latest, _) = watch::channel(Published::new(&snapshot));
    let (stream, _) = broadcast::channel(STREAM_BUFFER);
    let id = format!("s{}", app.inner.next_id.fetch_add(1, Ordering::Relaxed));
    let handle = Arc::new(SessionHandle {
        session: Mutex::new(session),
        latest,
        stream,
        ticker: Mutex::new(None),
    });
    app.inner
        .sessions
        .write()
        .expect("sessions lock")
        .insert(id.clone(), handle);
    Ok((StatusCode::CREATED, Json(Created { id, snapshot })).into_response())
}

#[derive(Debug, Deserialize)]
struct InstructionBody {
    text: String,
}

async fn submit_instruction(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<InstructionBody>,
) -> Result<Json<InstructionEvent>, ApiError> {
    let h = app.get(&id)?;
    let event = tokio::task::spawn_blocking(move || h.with_session(|s| (s.submit_instruction(&body.text), Vec::new())))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(event))
}

#[derive(Debug, Deserialize)]
struct TickBody {
    #[serde(default = "one")]
    n: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TickReply {
    pub tick: u64,
    pub advanced: u64,
}

async fn run_ticks(h: Arc<SessionHandle>, n: u64) -> Result<TickReply, ApiError> {
    if n > MAX_TICKS_PER_REQUEST {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("at most {MAX_TICKS_PER_REQUEST} ticks per request"),
        ));
    }
    tokio::task::spawn_blocking(move || {
        h.with_session(|s| {
            let snaps = s.tick(n);
            (
                TickReply {
                    tick: s.tick_count(),
                    advanced: snaps.len() as u64,
                },
                snaps,
            )
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn tick(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<TickBody>,
) -> Result<Json<TickReply>, ApiError> {
    let h = app.get(&id)?;
    Ok(Json(run_ticks(h, body.n).await?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModeReply {
    pub mode: RunMode,
    pub tick: u64,
    pub advanced: u64,
}

async fn set_mode(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(mode): Json<RunMode>,
) -> Result<Json<ModeReply>, ApiError> {
    let h = app.get(&id)?;
    mode.validate()?;
    h.stop_ticker();
    let h2 = h.clone();
    let (mode_now, advanced, tick) = tokio::task::spawn_blocking(move || {
        h2.with_session(|s| match s.set_mode(mode) {
            Ok(snaps) => ((Ok(s.mode()), snaps.len() as u64, s.tick_count()), snaps),
            Err(e) => ((Err(e), 0, s.tick_count()), Vec::new()),
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let mode_now = mode_now?;
    if let RunMode::Realtime { hz } = mode_now {
        let period = Duration::from_secs_f64(1.0 / hz);
        let ticker_handle = h.clone();
        let task = tokio::spawn(async move {
            let mut interval = tokio::time::interval_at(tokio::time::Instant::now() + period, period);
            interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
            loop {
                interval.tick().await;
                let h = ticker_handle.clone();
                // A tick that loses the race against a mode change must not run.
                let still_running = tokio::task::spawn_blocking(move || {
                    h.with_session(|s| match s.mode() {
                        RunMode::Realtime { .. } => (true, s.tick(1)),
                        _ => (false, Vec::new()),
                    })
                })
                .await
                .unwrap_or(false);
                if !still_running {
                    break;
                }
            }
        });
        *h.ticker.lock().expect("ticker lock") = Some(task);
    }
    Ok(Json(ModeReply {
        mode: mode_now,
        tick,
        advanced,
    }))
}

fn json_response(body: String) -> Response {
    ([(axum::http::header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn snapshot(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let h = app.get(&id)?;
    let latest = h.latest.borrow().clone();
    Ok(json_response(latest.json.clone()))
}

async fn costmap(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let h = app.get(&id)?;
    let s = h.session.lock().expect("session lock");
    let body = serde_json::to_string(&s.costmap()).expect("costmap serializes");
    Ok(json_response(body))
}

async fn events(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<EventLog>, ApiError> {
    let h = app.get(&id)?;
    let log = h.session.lock().expect("session lock").event_log();
    Ok(Json(log))
}

async fn stream_snapshots(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let h = app.get(&id)?;
    let rx = h.stream.subscribe();
    let events = stream::unfold(rx, |mut rx| async move {
        let ev = match rx.recv().await {
            Ok(p) => Event::default().event("snapshot").id(p.tick.to_string()).data(p.json.clone()),
            Err(broadcast::error::RecvError::Lagged(k)) => Event::default().event("lagged").data(k.to_string()),
            Err(broadcast::error::RecvError::Closed) => return None,
        };
        Some((Ok(ev), rx))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}
