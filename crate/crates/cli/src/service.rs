//! HTTP/JSON service: games, thresholds and play sessions.
//!
//! Everything a restart needs lives in the store directory. Games are saved
//! in canonical form and sessions as their options plus the list of human
//! actions, which replays to the same state because engine moves depend on
//! the session alone.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bidgame::certifier::certify;
use bidgame::engine::{HumanSide, PlayError, RoundRecord, Session, SessionOptions, SessionState, StrategySource};
use bidgame::{AdvValue, FrugalParityGame, GameDoc, GameError, ThresholdMap};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::verdict_line;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", format!("no {what} {id:?}"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

impl From<GameError> for ApiError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::Invalid(_) | GameError::Objective { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid-game", e.to_string())
            }
            GameError::UnknownVertex(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown-vertex", e.to_string()),
            GameError::Json(_) => Self::bad_request(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<PlayError> for ApiError {
    fn from(e: PlayError) -> Self {
        match e {
            PlayError::IllegalBid { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "illegal-bid", e.to_string()),
            PlayError::IllegalMove { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "illegal-move", e.to_string()),
            PlayError::Finished => Self::new(StatusCode::CONFLICT, "finished", e.to_string()),
            PlayError::MissingAction(_) | PlayError::NotHuman(_) => Self::bad_request(e.to_string()),
            PlayError::Game(g) => g.into(),
            PlayError::Budget(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "bad-budget", e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        Self::internal(e.to_string())
    }
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewSession {
    #[serde(default)]
    pub schema: Option<u32>,
    pub game: String,
    pub human: HumanSide,
    pub start: String,
    pub p1_budget: AdvValue,
    #[serde(default)]
    pub source: Option<StrategySource>,
    #[serde(default)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BidRequest {
    #[serde(default)]
    pub schema: Option<u32>,
    #[serde(default)]
    pub bid: Option<AdvValue>,
    #[serde(default, rename = "move")]
    pub target: Option<String>,
}

/// What is written to disk for a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionFile {
    schema: u32,
    game: String,
    options: SessionOptions,
    actions: Vec<Option<(AdvValue, String)>>,
}

struct LiveSession {
    file: SessionFile,
    session: Session,
}

struct GameEntry {
    game: FrugalParityGame,
    thresholds: Option<Value>,
}

/// Games and sessions, mirrored to `dir` when it is set.
pub struct Store {
    dir: Option<PathBuf>,
    games: Mutex<BTreeMap<String, Arc<Mutex<GameEntry>>>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<LiveSession>>>>,
    next_game: Mutex<u64>,
    next_session: Mutex<u64>,
}

fn numbered(id: &str, prefix: &str) -> Option<u64> {
    id.strip_prefix(prefix)?.parse().ok()
}

fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(tmp, path)
}

impl Store {
    pub fn in_memory() -> Self {
        Store {
            dir: None,
            games: Mutex::default(),
            sessions: Mutex::default(),
            next_game: Mutex::new(1),
            next_session: Mutex::new(1),
        }
    }

    /// Opens `dir`, replaying every stored session.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ApiError> {
        let dir = dir.into();
        std::fs::create_dir_all(dir.join("games"))?;
        std::fs::create_dir_all(dir.join("sessions"))?;
        let mut store = Store::in_memory();
        let mut max_game = 0;
        for path in sorted_json(&dir.join("games"))? {
            let id = stem(&path);
            let game = FrugalParityGame::load(&path)?;
            max_game = max_game.max(numbered(&id, "g").unwrap_or(0));
            store.insert_game(id, game);
        }
        let mut max_session = 0;
        for path in sorted_json(&dir.join("sessions"))? {
            let id = stem(&path);
            let file: SessionFile = parse(&std::fs::read(&path)?)?;
            let live = store.replay(file)?;
            max_session = max_session.max(numbered(&id, "s").unwrap_or(0));
            store.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(live)));
        }
        *store.next_game.lock().unwrap() = max_game + 1;
        *store.next_session.lock().unwrap() = max_session + 1;
        store.dir = Some(dir);
        Ok(store)
    }

    fn insert_game(&self, id: String, game: FrugalParityGame) {
        let entry = GameEntry { game, thresholds: None };
        self.games.lock().unwrap().insert(id, Arc::new(Mutex::new(entry)));
    }

    fn game(&self, id: &str) -> Result<Arc<Mutex<GameEntry>>, ApiError> {
        self.games
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("game", id))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<LiveSession>>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    fn replay(&self, file: SessionFile) -> Result<LiveSession, ApiError> {
        let game = self.game(&file.game)?.lock().unwrap().game.clone();
        let mut session = Session::new(game, file.options.clone()).map_err(ApiError::from)?;
        for a in &file.actions {
            let action = match a {
                Some((bid, target)) => Some(session.action(*bid, target)?),
                None => None,
            };
            session.step(action)?;
        }
        Ok(LiveSession { file, session })
    }

    fn save_game(&self, id: &str, g: &FrugalParityGame) -> Result<(), ApiError> {
        if let Some(dir) = &self.dir {
            write_atomic(&dir.join("games").join(format!("{id}.json")), &g.to_json())?;
        }
        Ok(())
    }

    fn save_session(&self, id: &str, file: &SessionFile) -> Result<(), ApiError> {
        if let Some(dir) = &self.dir {
            let text = serde_json::to_string_pretty(file).expect("session serializes");
            write_atomic(&dir.join("sessions").join(format!("{id}.json")), &text)?;
        }
        Ok(())
    }
}

fn sorted_json(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort_by_key(|p| {
        let s = stem(p);
        (
            s.trim_start_matches(|c: char| c.is_ascii_alphabetic())
                .parse::<u64>()
                .unwrap_or(0),
            s,
        )
    });
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

type AppState = Arc<Store>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/games", post(create_game))
        .route("/games/{id}/thresholds", get(thresholds))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/bid", post(bid))
        .route("/sessions/{id}/log", get(log))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such endpoint") })
        .with_state(store)
}

async fn create_game(State(store): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let doc: GameDoc = parse(&body)?;
    if let Some(s) = doc.schema.filter(|&s| s != 1) {
        return Err(ApiError::bad_request(format!("unsupported schema {s}")));
    }
    let game = bidgame::normalize_objective(&doc)?;
    let id = {
        let mut n = store.next_game.lock().unwrap();
        let id = format!("g{n}");
        *n += 1;
        id
    };
    store.save_game(&id, &game)?;
    let body = json!({
        "schema": 1,
        "id": id,
        "vertices": game.names(),
        "k": game.k(),
    });
    store.insert_game(id, game);
    Ok((StatusCode::CREATED, Json(body)))
}

async fn thresholds(State(store): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let entry = store.game(&id)?;
    let mut entry = entry.lock().unwrap();
    if let Some(v) = &entry.thresholds {
        return Ok(Json(v.clone()));
    }
    let (t, _) = crate::commands::solve_game(&entry.game).map_err(|e| ApiError::internal(e.to_string()))?;
    let report = certify(&entry.game, &t).map_err(|e| ApiError::internal(e.to_string()))?;
    let v = json!({
        "schema": 1,
        "game": id,
        "thresholds": t.to_json(&entry.game),
        "certification": report.verdict,
        "summary": verdict_line(&report.verdict),
    });
    entry.thresholds = Some(v.clone());
    Ok(Json(v))
}

fn overlay(g: &FrugalParityGame, t: &ThresholdMap) -> BTreeMap<String, Value> {
    let dual = t.complement(g.k());
    g.vertices()
        .map(|v| {
            let row = json!({ "player1": t.get(v), "player2": dual.get(v) });
            (g.name(v).to_string(), row)
        })
        .collect()
}

#[derive(Serialize)]
struct SessionView<'a> {
    schema: u32,
    id: &'a str,
    game: &'a str,
    state: SessionState,
    thresholds: BTreeMap<String, Value>,
    moves: Vec<&'a str>,
    k: u64,
}

fn view<'a>(id: &'a str, live: &'a LiveSession) -> SessionView<'a> {
    let s = &live.session;
    let g = s.game();
    let moves = if s.is_over() {
        Vec::new()
    } else {
        g.successors(s.vertex()).iter().map(|&u| g.name(u)).collect()
    };
    SessionView {
        schema: 1,
        id,
        game: &live.file.game,
        state: s.state(),
        thresholds: overlay(g, s.thresholds()),
        moves,
        k: g.k(),
    }
}

async fn create_session(State(store): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: NewSession = parse(&body)?;
    let game = store.game(&req.game)?.lock().unwrap().game.clone();
    game.index_of(&req.start)?;
    if req.p1_budget > game.total() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "bad-budget",
            format!("budget {} exceeds {}", req.p1_budget, game.total()),
        ));
    }
    let mut options = SessionOptions::new(req.human, &req.start, req.p1_budget);
    if let Some(s) = req.source {
        options.source = s;
    }
    if let Some(h) = req.horizon {
        options.horizon = h;
    }
    let session = Session::new(game, options.clone())?;
    let file = SessionFile {
        schema: 1,
        game: req.game,
        options,
        actions: Vec::new(),
    };
    let id = {
        let mut n = store.next_session.lock().unwrap();
        let id = format!("s{n}");
        *n += 1;
        id
    };
    store.save_session(&id, &file)?;
    let live = LiveSession { file, session };
    let body = serde_json::to_value(view(&id, &live)).expect("view serializes");
    store.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(live)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(store): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let live = store.session(&id)?;
    let live = live.lock().unwrap();
    Ok(Json(serde_json::to_value(view(&id, &live)).expect("view serializes")))
}

async fn bid(
    State(store): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: BidRequest = if body.is_empty() {
        BidRequest::default()
    } else {
        parse(&body)?
    };
    let live = store.session(&id)?;
    let mut live = live.lock().unwrap();
    let human = live.session.options().human;
    let action = match (human, req.bid, req.target) {
        (HumanSide::None, _, _) => None,
        (_, Some(b), Some(t)) => Some((b, t)),
        _ => {
            return Err(ApiError::bad_request(
                "expected {\"bid\": <budget>, \"move\": <vertex>}",
            ))
        }
    };
    live.session.commit();
    let resolved = match &action {
        Some((b, t)) => Some(live.session.action(*b, t)?),
        None => None,
    };
    let record: RoundRecord = live.session.step(resolved)?;
    live.file.actions.push(action);
    store.save_session(&id, &live.file)?;
    let mut out = json!({ "schema": 1, "round": record });
    out["session"] = serde_json::to_value(view(&id, &live)).expect("view serializes");
    Ok(Json(out))
}

async fn log(State(store): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let live = store.session(&id)?;
    let live = live.lock().unwrap();
    let mut text = String::new();
    for r in live.session.history() {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

pub async fn serve(port: u16, store: PathBuf) -> anyhow::Result<()> {
    let store = Store::open(&store).map_err(|e| anyhow::anyhow!("{}: {}", e.code, e.message))?;
    let app = router(Arc::new(store));
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
