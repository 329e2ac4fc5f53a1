use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bidgame_cli::service::{router, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    std::fs::read_to_string(p).unwrap()
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = call(app, method, uri, body.map(|b| b.to_string())).await;
    (status, serde_json::from_str(&text).unwrap())
}

async fn upload_fix_a(app: &Router) -> String {
    let (status, v) = call(app, "POST", "/games", Some(fixture("fixA.game"))).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let v: Value = serde_json::from_str(&v).unwrap();
    v["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn games_and_thresholds() {
    let app = router(Arc::new(Store::in_memory()));
    let id = upload_fix_a(&app).await;
    let (status, v) = call_json(&app, "GET", &format!("/games/{id}/thresholds"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["thresholds"], json!({"t": "2", "v0": "5", "v1": "4*", "v2": "3*"}));
    assert_eq!(v["certification"]["verdict"], "verified");

    let (status, v) = call_json(&app, "GET", "/games/nope/thresholds", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not-found");
    assert!(v["message"].is_string());
}

#[tokio::test]
async fn invalid_uploads() {
    let app = router(Arc::new(Store::in_memory()));
    let (status, v) = call_json(
        &app,
        "POST",
        "/games",
        Some(serde_json::from_str(&fixture("bad.game")).unwrap()),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "invalid-game");
    let (status, text) = call(&app, "POST", "/games", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["code"], "bad-request");
}

#[tokio::test]
async fn session_flow() {
    let app = router(Arc::new(Store::in_memory()));
    let game = upload_fix_a(&app).await;
    let (status, v) = call_json(
        &app,
        "POST",
        "/sessions",
        Some(json!({"schema": 1, "game": game, "human": "player2", "start": "v0", "p1_budget": "5"})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let sid = v["id"].as_str().unwrap().to_string();
    assert_eq!(v["state"]["p1_budget"], "5");
    assert_eq!(v["state"]["p2_budget"], "0*");
    assert_eq!(v["state"]["engines"][0]["source"], "certified");
    assert_eq!(v["thresholds"]["v0"], json!({"player1": "5", "player2": "1"}));

    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/sessions/{sid}/bid"),
        Some(json!({"bid": "1*", "move": "v0"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "illegal-bid");
    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/sessions/{sid}/bid"),
        Some(json!({"bid": "0", "move": "v2"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "illegal-move");

    let mut rounds = 0;
    loop {
        let (status, v) = call_json(&app, "GET", &format!("/sessions/{sid}"), None).await;
        assert_eq!(status, StatusCode::OK);
        if v["state"]["outcome"]["status"] != "running" {
            assert_eq!(v["state"]["outcome"]["status"], "finished");
            assert_eq!(v["state"]["outcome"]["winner"], "player1");
            break;
        }
        let p2 = v["state"]["p2_budget"].as_str().unwrap().to_string();
        let bid = if p2.ends_with('*') { "0*" } else { "0" };
        let (status, v) = call_json(
            &app,
            "POST",
            &format!("/sessions/{sid}/bid"),
            Some(json!({"bid": bid, "move": "v0"})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        assert_eq!(v["round"]["round"], rounds + 1);
        rounds += 1;
        assert!(rounds < 50);
    }
    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/sessions/{sid}/bid"),
        Some(json!({"bid": "0", "move": "v0"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["code"], "finished");

    let (status, log) = call(&app, "GET", &format!("/sessions/{sid}/log"), None).await;
    assert_eq!(status, StatusCode::OK);
    let lines: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), rounds);
    for key in [
        "round",
        "vertex",
        "p1_budget",
        "bids",
        "winner",
        "advantage_used",
        "next_vertex",
    ] {
        assert!(lines[0].get(key).is_some(), "{key}");
    }
}

#[tokio::test]
async fn store_replays_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (sid, before, log_before) = {
        let app = router(Arc::new(Store::open(dir.path()).unwrap()));
        let game = upload_fix_a(&app).await;
        let (_, v) = call_json(
            &app,
            "POST",
            "/sessions",
            Some(json!({"game": game, "human": "player1", "start": "v0", "p1_budget": "4"})),
        )
        .await;
        let sid = v["id"].as_str().unwrap().to_string();
        for _ in 0..3 {
            let (_, v) = call_json(&app, "GET", &format!("/sessions/{sid}"), None).await;
            let Some(mv) = v["moves"][0].as_str() else { break };
            let (status, v) = call_json(
                &app,
                "POST",
                &format!("/sessions/{sid}/bid"),
                Some(json!({"bid": "1", "move": mv})),
            )
            .await;
            assert_eq!(status, StatusCode::OK, "{v}");
        }
        let (_, state) = call_json(&app, "GET", &format!("/sessions/{sid}"), None).await;
        let (_, log) = call(&app, "GET", &format!("/sessions/{sid}/log"), None).await;
        (sid, state, log)
    };
    assert!(!log_before.is_empty());
    let app = router(Arc::new(Store::open(dir.path()).unwrap()));
    let (status, after) = call_json(&app, "GET", &format!("/sessions/{sid}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    let (_, log_after) = call(&app, "GET", &format!("/sessions/{sid}/log"), None).await;
    assert_eq!(log_before, log_after);
    let id = upload_fix_a(&app).await;
    assert_eq!(id, "g2");
}

#[tokio::test]
async fn engine_only_session() {
    let app = router(Arc::new(Store::in_memory()));
    let game = upload_fix_a(&app).await;
    let (_, v) = call_json(
        &app,
        "POST",
        "/sessions",
        Some(json!({"game": game, "human": "none", "start": "v0", "p1_budget": "5"})),
    )
    .await;
    let sid = v["id"].as_str().unwrap().to_string();
    let (status, v) = call_json(&app, "POST", &format!("/sessions/{sid}/bid"), None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["round"]["round"], 1);
}
