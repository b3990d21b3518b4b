//! HTTP API over the journaled session engine.
//!
//! Requests for one session are serialized by a per-session async mutex;
//! different sessions proceed concurrently. Physics, storage and provider
//! calls run on the blocking pool. In [`GenerationMode::Background`] the next
//! round is generated off the request path and the client polls
//! `GET /sessions/{id}` until the table is racked.

mod error;
pub mod view;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use cuepath_core::career::{Session, SessionConfig, SessionStatus, UserProfile};
use cuepath_core::engine::Engine;
use cuepath_core::ids::SessionId;
use cuepath_core::physics::ShotInput;
use cuepath_core::pipeline::{
    generate_round, GenerationContext, GenerationPolicy, Provider, ProviderKind, RemoteConfig,
    RemoteProvider, TemplateProvider,
};
use cuepath_core::report::JourneyReport;
use cuepath_core::store::{Clock, SessionStore};
use tokio::sync::{Mutex, OwnedMutexGuard};

pub use error::ApiError;
use view::{
    CreateSessionRequest, DecisionRequest, GenerationView, SessionView, ShotRequest, ShotResponse,
};

/// Frame rate of the trace delivered to clients.
pub const DELIVERED_FPS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenerationMode {
    /// Next round generated by a spawned task; the shot response returns at once.
    #[default]
    Background,
    /// Next round generated before the shot or decision response is sent.
    Inline,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Table, day rule and limits for new sessions. The provider is chosen per request.
    pub session: SessionConfig,
    pub default_provider: ProviderKind,
    /// Remote provider settings; `None` disables the remote provider.
    pub remote: Option<RemoteConfig>,
    pub policy: GenerationPolicy,
    pub mode: GenerationMode,
    /// Attempts made by a background generation task before it gives up.
    pub background_attempts: u32,
    pub background_backoff: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            session: SessionConfig::default(),
            default_provider: ProviderKind::Template,
            remote: None,
            policy: GenerationPolicy::default(),
            mode: GenerationMode::Background,
            background_attempts: 3,
            background_backoff: Duration::from_millis(500),
        }
    }
}

struct Slot {
    session: Session,
    generating: bool,
    generation_error: Option<String>,
}

impl Slot {
    fn new(session: Session) -> Self {
        Slot {
            session,
            generating: false,
            generation_error: None,
        }
    }

    fn view(&self) -> SessionView {
        SessionView::of(
            &self.session,
            GenerationView {
                in_flight: self.generating,
                error: self.generation_error.clone(),
            },
        )
    }
}

type SlotHandle = Arc<Mutex<Slot>>;

struct Shared {
    store: Arc<dyn SessionStore>,
    clock: Arc<dyn Clock>,
    template: Arc<TemplateProvider>,
    remote: Option<Arc<RemoteProvider>>,
    config: ServiceConfig,
    slots: std::sync::Mutex<HashMap<SessionId, SlotHandle>>,
}

impl Shared {
    fn engine(&self) -> Engine<'_> {
        Engine::new(self.store.as_ref(), self.clock.as_ref())
    }

    fn provider(&self, kind: ProviderKind) -> Result<Arc<dyn Provider>, ApiError> {
        match kind {
            ProviderKind::Template => Ok(self.template.clone()),
            ProviderKind::Remote => match &self.remote {
                Some(remote) => Ok(remote.clone()),
                None => Err(ApiError::bad_request(
                    "remote provider is not configured on this server",
                )),
            },
        }
    }

    fn cached(&self, id: &SessionId) -> Option<SlotHandle> {
        self.slots
            .lock()
            .expect("slot map poisoned")
            .get(id)
            .cloned()
    }
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(store: Arc<dyn SessionStore>, clock: Arc<dyn Clock>, config: ServiceConfig) -> Self {
        let remote = config
            .remote
            .clone()
            .map(|c| Arc::new(RemoteProvider::new(c)));
        AppState(Arc::new(Shared {
            store,
            clock,
            template: Arc::new(TemplateProvider::new()),
            remote,
            config,
            slots: std::sync::Mutex::new(HashMap::new()),
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    /// Returns the session's slot, loading it from the store on first access.
    /// A session found waiting for a round (e.g. after a restart) gets its
    /// generation restarted.
    async fn slot(&self, id: &SessionId) -> Result<SlotHandle, ApiError> {
        if let Some(slot) = self.0.cached(id) {
            return Ok(slot);
        }
        if !id.is_well_formed() {
            return Err(ApiError::not_found(id));
        }
        let shared = self.0.clone();
        let key = id.clone();
        let session = blocking(move || {
            shared
                .store
                .load(&key)
                .map(|(s, _)| s)
                .map_err(ApiError::from)
        })
        .await?;
        let awaiting = session.status == SessionStatus::AwaitingRound;
        let (slot, inserted) = {
            let mut slots = self.0.slots.lock().expect("slot map poisoned");
            match slots.get(id) {
                Some(existing) => (existing.clone(), false),
                None => {
                    let slot = Arc::new(Mutex::new(Slot::new(session)));
                    slots.insert(id.clone(), slot.clone());
                    (slot, true)
                }
            }
        };
        if inserted && awaiting {
            slot.lock().await.generating = true;
            spawn_generation(self.0.clone(), slot.clone());
        }
        Ok(slot)
    }

    fn insert(&self, session: Session) -> SlotHandle {
        let id = session.id.clone();
        let slot = Arc::new(Mutex::new(Slot::new(session)));
        self.0
            .slots
            .lock()
            .expect("slot map poisoned")
            .insert(id, slot.clone());
        slot
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/shots", post(take_shot))
        .route("/sessions/{id}/decision", post(decide))
        .route("/sessions/{id}/report", get(get_report))
        .with_state(state)
}

/// Serves the API until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

/// Trace stride that brings the integrator rate down to [`DELIVERED_FPS`].
fn frame_stride(session: &Session) -> usize {
    let hz = 1.0 / session.config.table.fixed_dt;
    ((hz / DELIVERED_FPS).round() as usize).max(1)
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = json_body(body)?;
    let profile = UserProfile {
        intro: req.profile.intro,
        goal: req.profile.goal,
        start_date: req
            .profile
            .start_date
            .unwrap_or_else(|| chrono::Utc::now().date_naive()),
    };
    profile.validate()?;
    let kind = req.provider.unwrap_or(app.0.config.default_provider);
    let provider = app.0.provider(kind)?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let mut config = app.0.config.session.clone();
    config.provider = kind;
    let id = SessionId::random();

    let shared = app.0.clone();
    let outcome = blocking(move || {
        let engine = shared.engine();
        let mut session = engine.create(id, profile, seed, config)?;
        let generated =
            engine.advance_round(&mut session, provider.as_ref(), &shared.config.policy);
        Ok((session, generated))
    })
    .await?;
    let (session, generated) = outcome;
    let id = session.id.clone();
    tracing::info!(session = %id, seed, provider = %kind, "session created");
    let slot = app.insert(session);
    if let Err(e) = generated {
        slot.lock().await.generation_error = Some(e.to_string());
        return Err(ApiError::from(e).for_session(&id));
    }
    let view = slot.lock().await.view();
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let slot = app.slot(&SessionId(id)).await?;
    let view = slot.lock().await.view();
    Ok(Json(view))
}

async fn take_shot(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ShotRequest>, JsonRejection>,
) -> Result<Json<ShotResponse>, ApiError> {
    let id = SessionId(id);
    let req = json_body(body)?;
    let slot = app.slot(&id).await?;
    let guard = slot.clone().lock_owned().await;
    require_status(&guard, SessionStatus::Active)?;
    let shot = ShotInput::new(req.direction, req.drag_fraction)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;

    let shared = app.0.clone();
    let (guard, result) = blocking(move || {
        let mut guard = guard;
        let result = shared.engine().shoot(&mut guard.session, shot)?;
        Ok((guard, result))
    })
    .await?;
    let stride = frame_stride(&guard.session);
    let guard = after_mutation(&app, slot, guard).await;
    Ok(Json(ShotResponse {
        days_charged: result.days_charged,
        frames: result.trace.downsample(stride),
        pocketed: result.pocketed,
        session: guard.view(),
    }))
}

async fn decide(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<DecisionRequest>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let id = SessionId(id);
    let req = json_body(body)?;
    let slot = app.slot(&id).await?;
    let guard = slot.clone().lock_owned().await;
    if guard.session.pending_decision.is_none() {
        return Err(ApiError::conflict(format!(
            "no decision is pending (session is {})",
            guard.session.status
        ))
        .for_session(&id));
    }
    let shared = app.0.clone();
    let guard = blocking(move || {
        let mut guard = guard;
        shared.engine().decide(&mut guard.session, req.accept)?;
        Ok(guard)
    })
    .await?;
    let guard = after_mutation(&app, slot, guard).await;
    Ok(Json(guard.view()))
}

async fn get_report(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<JourneyReport>, ApiError> {
    let id = SessionId(id);
    let slot = app.slot(&id).await?;
    let guard = slot.clone().lock_owned().await;
    require_status(&guard, SessionStatus::Completed)?;
    if let Some(report) = &guard.session.report {
        return Ok(Json(report.clone()));
    }
    let provider = app.0.provider(guard.session.config.provider)?;
    let shared = app.0.clone();
    let report = blocking(move || {
        let mut guard = guard;
        let report =
            shared
                .engine()
                .report(&mut guard.session, provider.as_ref(), &shared.config.policy)?;
        Ok(report)
    })
    .await
    .map_err(|e| e.for_session(&id))?;
    Ok(Json(report))
}

fn require_status(slot: &Slot, expected: SessionStatus) -> Result<(), ApiError> {
    let actual = slot.session.status;
    if actual == expected {
        return Ok(());
    }
    let detail = match (actual, &slot.generation_error) {
        (SessionStatus::AwaitingRound, Some(e)) => format!("; round generation failed: {e}"),
        (SessionStatus::AwaitingRound, None) => "; the next round is being generated".to_string(),
        _ => String::new(),
    };
    Err(
        ApiError::conflict(format!("session is {actual}, expected {expected}{detail}"))
            .for_session(&slot.session.id),
    )
}

/// Starts generation of the next round when the session is waiting for one.
async fn after_mutation(
    app: &AppState,
    slot: SlotHandle,
    guard: OwnedMutexGuard<Slot>,
) -> OwnedMutexGuard<Slot> {
    if guard.session.status != SessionStatus::AwaitingRound || guard.generating {
        return guard;
    }
    match app.0.config.mode {
        GenerationMode::Background => {
            let mut guard = guard;
            guard.generating = true;
            guard.generation_error = None;
            spawn_generation(app.0.clone(), slot);
            guard
        }
        GenerationMode::Inline => {
            let shared = app.0.clone();
            let joined = tokio::task::spawn_blocking(move || {
                let mut guard = guard;
                let outcome = shared
                    .provider(guard.session.config.provider)
                    .map_err(|e| e.message)
                    .and_then(|p| {
                        shared
                            .engine()
                            .advance_round(&mut guard.session, p.as_ref(), &shared.config.policy)
                            .map_err(|e| e.to_string())
                    });
                guard.generation_error = outcome.err();
                guard
            })
            .await;
            match joined {
                Ok(guard) => guard,
                Err(e) => {
                    // The guard was lost with the panicked worker; take the lock again.
                    tracing::error!(error = %e, "inline generation worker failed");
                    let mut guard = slot.lock_owned().await;
                    guard.generation_error = Some(format!("worker failed: {e}"));
                    guard
                }
            }
        }
    }
}

/// Generates the next round off the request path. The slot is locked only
/// to read the context and to commit, so reads stay responsive meanwhile.
fn spawn_generation(shared: Arc<Shared>, slot: SlotHandle) {
    tokio::spawn(async move {
        let attempts = shared.config.background_attempts.max(1);
        for attempt in 1..=attempts {
            let (ctx, seed, kind, round) = {
                let mut g = slot.lock().await;
                if g.session.status != SessionStatus::AwaitingRound {
                    g.generating = false;
                    return;
                }
                let s = &g.session;
                (
                    GenerationContext::from_session(s),
                    s.rng_seed,
                    s.config.provider,
                    s.current_round,
                )
            };
            let provider = match shared.provider(kind) {
                Ok(p) => p,
                Err(e) => {
                    let mut g = slot.lock().await;
                    g.generating = false;
                    g.generation_error = Some(e.message);
                    return;
                }
            };
            let policy = shared.config.policy.clone();
            let generated = tokio::task::spawn_blocking(move || {
                generate_round(provider.as_ref(), &ctx, seed, &policy)
            })
            .await
            .map_err(|e| format!("worker failed: {e}"))
            .and_then(|r| r.map_err(|e| e.to_string()));

            let guard = slot.clone().lock_owned().await;
            let committer = shared.clone();
            let committed = tokio::task::spawn_blocking(move || {
                let mut guard = guard;
                let stale = guard.session.status != SessionStatus::AwaitingRound
                    || guard.session.current_round != round;
                let result = match generated {
                    _ if stale => Ok(()),
                    Ok(g) => committer
                        .engine()
                        .commit_round(&mut guard.session, g, kind)
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e),
                };
                match &result {
                    Ok(()) => {
                        guard.generating = false;
                        guard.generation_error = None;
                    }
                    Err(e) => {
                        guard.generating = attempt < attempts;
                        guard.generation_error = Some(e.clone());
                    }
                }
                result
            })
            .await;
            match committed {
                Ok(Ok(())) => return,
                Ok(Err(e)) => {
                    tracing::warn!(attempt, error = %e, "background round generation failed");
                    tokio::time::sleep(shared.config.background_backoff * attempt).await;
                }
                Err(e) => {
                    tracing::error!(error = %e, "background commit worker failed");
                    let mut g = slot.lock().await;
                    g.generating = false;
                    g.generation_error = Some(format!("worker failed: {e}"));
                    return;
                }
            }
        }
    });
}
