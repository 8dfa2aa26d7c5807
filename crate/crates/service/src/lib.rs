//! HTTP+JSON API for live question-answering sessions.
//!
//! Sessions live in memory and expire after an idle TTL. Each session sits
//! behind its own async mutex, so requests for one session run one at a
//! time in arrival order while different sessions proceed in parallel. The
//! trained model and corpus are shared read-only.

pub mod api;
mod error;

use std::collections::HashMap;
use std::future::Future;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::HeaderValue;
use axum::routing::{get, post};
use axum::{Json, Router};
use log::{debug, info};
use tower_http::cors::{Any, CorsLayer};

use qrec::session::Question;
use qrec::{HyperParams, Recommender, Session, SessionOptions, SessionUser};

use api::*;
pub use error::ApiError;

/// Grid size shown to users.
pub const DEFAULT_TOP_K: usize = 16;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub hyper_params: HyperParams,
    /// Questions per session before it is marked done.
    pub max_questions: usize,
    pub idle_ttl: Duration,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            hyper_params: HyperParams::default(),
            max_questions: 20,
            idle_ttl: Duration::from_secs(30 * 60),
            cors_origin: None,
        }
    }
}

struct Entry {
    mode: Mode,
    target: Option<usize>,
    session: Session,
    question: Option<Question>,
    done: bool,
    summary: Option<StopSummary>,
    last_active: Instant,
}

/// Shared service state: the recommender and the live sessions.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    rec: Arc<Recommender>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Entry>>>>,
}

impl AppState {
    pub fn new(rec: Arc<Recommender>, config: ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                rec,
                config,
                sessions: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn session_count(&self) -> usize {
        self.sessions().len()
    }

    fn sessions(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<tokio::sync::Mutex<Entry>>>> {
        self.inner.sessions.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Drops sessions idle for longer than the TTL; returns how many went.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let ttl = self.inner.config.idle_ttl;
        let mut sessions = self.sessions();
        let before = sessions.len();
        sessions.retain(|_, entry| match entry.try_lock() {
            Ok(e) => now.saturating_duration_since(e.last_active) <= ttl,
            // In use right now, so not idle.
            Err(_) => true,
        });
        before - sessions.len()
    }

    fn lookup(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Entry>>, ApiError> {
        self.sessions()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }

    /// Locks a live session, treating an expired one as gone.
    async fn with_entry<T>(&self, id: &str, f: impl FnOnce(&mut Entry) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let handle = self.lookup(id)?;
        let mut entry = handle.lock().await;
        let now = Instant::now();
        if now.saturating_duration_since(entry.last_active) > self.inner.config.idle_ttl {
            drop(entry);
            self.sessions().remove(id);
            return Err(ApiError::not_found(format!("session `{id}` expired")));
        }
        entry.last_active = now;
        f(&mut entry)
    }

    fn top_items(&self, session: &Session, k: usize) -> Vec<ItemView> {
        let corpus = self.inner.rec.corpus();
        session
            .recommendations(k)
            .into_iter()
            .enumerate()
            .map(|(n, r)| {
                let item = &corpus.items()[r.item];
                ItemView {
                    rank: n + 1,
                    item_id: item.item_id.clone(),
                    title: item.title.clone(),
                    score: r.score,
                }
            })
            .collect()
    }

    fn question_view(&self, q: &Question) -> QuestionView {
        QuestionView {
            entity: self.inner.rec.corpus().entity_name(q.entity).unwrap_or_default().to_string(),
            text: q.text.clone(),
        }
    }

    /// Issues the next question unless the cap is reached or the session
    /// has nothing left to ask.
    fn advance(&self, entry: &mut Entry) -> Result<(), ApiError> {
        entry.question = None;
        if entry.session.questions_asked() >= self.inner.config.max_questions {
            entry.done = true;
            return Ok(());
        }
        match entry.session.next_question()? {
            Some(q) => entry.question = Some(q),
            None => entry.done = true,
        }
        Ok(())
    }

    fn item_detail(&self, index: usize) -> ItemDetail {
        let corpus = self.inner.rec.corpus();
        let item = &corpus.items()[index];
        ItemDetail {
            item_id: item.item_id.clone(),
            title: item.title.clone(),
            document: item.document.clone(),
            entities: corpus
                .entities_of(index)
                .iter()
                .map(|&e| corpus.entity_vocab()[e].clone())
                .collect(),
        }
    }
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<Json<SessionCreated>, ApiError> {
    let Json(req) = body?;
    let rec = &state.inner.rec;
    let mut hp = state.inner.config.hyper_params;
    if let Some(gamma) = req.gamma {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(ApiError::bad_request(format!("gamma {gamma} must be a finite number >= 0")));
        }
        hp.gamma = gamma;
    }
    let user = match &req.user_id {
        Some(id) => SessionUser::Known(
            rec.ratings()
                .users()
                .get(id)
                .ok_or_else(|| ApiError::not_found(format!("unknown user `{id}`")))?,
        ),
        None => SessionUser::Cold,
    };
    let target = match (req.mode, &req.target_item) {
        (Mode::Study, Some(id)) => Some(
            rec.corpus()
                .item_index(id)
                .ok_or_else(|| ApiError::not_found(format!("unknown target item `{id}`")))?,
        ),
        (Mode::Study, None) => return Err(ApiError::bad_request("study mode needs target_item")),
        (Mode::Interactive, Some(_)) => return Err(ApiError::bad_request("target_item is only accepted in study mode")),
        (Mode::Interactive, None) => None,
    };

    let session = rec.start_session(user, &hp, SessionOptions::default())?;
    let mut entry = Entry {
        mode: req.mode,
        target,
        session,
        question: None,
        done: false,
        summary: None,
        last_active: Instant::now(),
    };
    state.advance(&mut entry)?;
    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let response = SessionCreated {
        session_id: session_id.clone(),
        mode: entry.mode,
        target: target.map(|t| state.item_detail(t)),
        question: entry.question.as_ref().map(|q| state.question_view(q)),
        done: entry.done,
        questions_asked: 0,
        top_items: state.top_items(&entry.session, DEFAULT_TOP_K),
    };
    state
        .sessions()
        .insert(session_id.clone(), Arc::new(tokio::sync::Mutex::new(entry)));
    debug!("session {session_id} created ({:?}, {user:?})", req.mode);
    Ok(Json(response))
}

async fn post_answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PostAnswer>, JsonRejection>,
) -> Result<Json<AnswerAccepted>, ApiError> {
    let Json(req) = body?;
    state
        .with_entry(&id, |entry| {
            if entry.summary.is_some() {
                return Err(ApiError::conflict("session is stopped"));
            }
            let asked = entry.session.questions_asked();
            if let Some(seen) = req.questions_asked {
                if seen != asked {
                    return Err(ApiError::conflict(format!(
                        "stale answer: client saw {seen} questions, session has {asked}"
                    )));
                }
            }
            let Some(question) = entry.question.take() else {
                return Err(ApiError::conflict("no question is pending"));
            };
            if let Err(e) = entry.session.apply_answer(question.entity, req.answer) {
                entry.question = Some(question);
                return Err(e.into());
            }
            state.advance(entry)?;
            Ok(Json(AnswerAccepted {
                question: entry.question.as_ref().map(|q| state.question_view(q)),
                done: entry.done,
                questions_asked: entry.session.questions_asked(),
                top_items: state.top_items(&entry.session, DEFAULT_TOP_K),
            }))
        })
        .await
}

async fn get_recommendations(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<TopK>, QueryRejection>,
) -> Result<Json<Recommendations>, ApiError> {
    let Query(q) = query?;
    let k = q.k.unwrap_or(DEFAULT_TOP_K);
    state
        .with_entry(&id, |entry| {
            Ok(Json(Recommendations {
                questions_asked: entry.session.questions_asked(),
                items: state.top_items(&entry.session, k),
            }))
        })
        .await
}

async fn stop_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<StopSummary>, ApiError> {
    state
        .with_entry(&id, |entry| {
            if let Some(summary) = &entry.summary {
                return Ok(Json(summary.clone()));
            }
            entry.session.stop();
            entry.question = None;
            entry.done = true;
            let summary = StopSummary {
                questions_asked: entry.session.questions_asked(),
                final_top_k: state.top_items(&entry.session, DEFAULT_TOP_K),
                target_rank: entry.target.map(|t| entry.session.rank_of(t)),
            };
            entry.summary = Some(summary.clone());
            Ok(Json(summary))
        })
        .await
}

async fn get_item(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ItemDetail>, ApiError> {
    let index = state
        .inner
        .rec
        .corpus()
        .item_index(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown item `{id}`")))?;
    Ok(Json(state.item_detail(index)))
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let rec = &state.inner.rec;
    Json(Health {
        status: "ok".into(),
        items: rec.corpus().n_items(),
        entities: rec.corpus().n_entities(),
        users: rec.ratings().n_users(),
        sessions: state.session_count(),
    })
}

/// The API routes with CORS applied.
pub fn router(state: AppState) -> Router {
    let cors = match &state.inner.config.cors_origin {
        Some(origin) => match origin.parse::<HeaderValue>() {
            Ok(v) => CorsLayer::new().allow_origin(v),
            Err(_) => CorsLayer::new().allow_origin(Any),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);

    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/answer", post(post_answer))
        .route("/api/sessions/{id}/recommendations", get(get_recommendations))
        .route("/api/sessions/{id}/stop", post(stop_session))
        .route("/api/items/{id}", get(get_item))
        .layer(cors)
        .with_state(state)
}

/// Serves until `shutdown` resolves, evicting idle sessions in the background.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let period = (state.config().idle_ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    let reaper_state = state.clone();
    let reaper = tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let gone = reaper_state.evict_idle(Instant::now());
            if gone > 0 {
                debug!("evicted {gone} idle sessions");
            }
        }
    });
    info!("listening on {}", listener.local_addr()?);
    let result = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await;
    reaper.abort();
    result
}
