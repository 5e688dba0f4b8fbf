use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use ellsberg_core::classification::Classifier;
use ellsberg_core::stats::{aggregate, ChoiceDataset};
use ellsberg_server::{router, AppState, Snapshot};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (status, text) = call(app, "POST", uri, Some(body)).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, text) = call(app, "GET", uri, None).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

struct Lobby {
    id: String,
    monitor: String,
    subjects: Vec<String>,
}

async fn lobby(app: &Router, mode: Value, subjects: usize) -> Lobby {
    let (status, created) = post(app, "/sessions", json!({ "mode": mode })).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["sessionId"].as_str().unwrap().to_string();
    let subject_code = created["joinCodes"]["subject"].as_str().unwrap().to_string();
    let monitor_code = created["joinCodes"]["monitor"].as_str().unwrap().to_string();
    let (status, m) = post(app, &format!("/sessions/{id}/join"), json!({ "code": monitor_code })).await;
    assert_eq!(status, StatusCode::OK, "{m}");
    let mut tokens = Vec::new();
    for _ in 0..subjects {
        let (status, s) = post(app, &format!("/sessions/{id}/join"), json!({ "code": subject_code })).await;
        assert_eq!(status, StatusCode::OK, "{s}");
        assert_eq!(s["role"], "subject");
        tokens.push(s["token"].as_str().unwrap().to_string());
    }
    Lobby {
        id,
        monitor: m["token"].as_str().unwrap().to_string(),
        subjects: tokens,
    }
}

async fn advance(app: &Router, lobby: &Lobby) -> Value {
    let (status, snap) = post(app, &format!("/sessions/{}/advance", lobby.id), json!({ "token": lobby.monitor })).await;
    assert_eq!(status, StatusCode::OK, "{snap}");
    snap
}

fn state_uri(lobby: &Lobby, token: &str) -> String {
    format!("/sessions/{}/state?token={token}", lobby.id)
}

#[tokio::test]
async fn create_returns_created_with_codes() {
    let app = router(AppState::in_memory());
    let (status, body) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let body: Value = serde_json::from_str(&body).unwrap();
    assert!(body["sessionId"].as_str().is_some_and(|s| !s.is_empty()));
    let codes = &body["joinCodes"];
    assert_ne!(codes["subject"], codes["monitor"]);
    assert_eq!(body["version"], 1);
}

#[tokio::test]
async fn full_session_hides_rules_until_close_and_exports_dataset() {
    let app = router(AppState::in_memory());
    let lobby = lobby(&app, json!({ "kind": "manual" }), 2).await;
    let (a, b) = (&lobby.subjects[0], &lobby.subjects[1]);
    advance(&app, &lobby).await;

    let rule_uri = format!("/sessions/{}/rule", lobby.id);
    let (status, _) = post(&app, &rule_uri, json!({ "token": a, "rule": "GWWY" })).await;
    assert_eq!(status, StatusCode::OK);
    let (status, err) = post(&app, &rule_uri, json!({ "token": a, "rule": "GGYY" })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "duplicate_rule");
    let (status, _) = post(&app, &rule_uri, json!({ "token": b, "rule": "YYGG" })).await;
    assert_eq!(status, StatusCode::OK);

    // the monitor sees who submitted, never what
    let (_, mon) = get_json(&app, &state_uri(&lobby, &lobby.monitor)).await;
    assert!(mon["roster"].as_array().unwrap().iter().all(|r| r.get("rule").is_none()));
    assert!(mon["controls"]["canAdvance"].as_bool().unwrap());

    advance(&app, &lobby).await;
    let draws_uri = format!("/sessions/{}/draws", lobby.id);
    let (status, _) = post(&app, &draws_uri, json!({ "token": lobby.monitor, "outcome": "YG" })).await;
    assert_eq!(status, StatusCode::OK);

    let (_, view_a) = get_json(&app, &state_uri(&lobby, a)).await;
    assert_eq!(view_a["infoDraws"], "YG");
    assert_eq!(view_a["you"]["rule"], "GWWY");
    assert_eq!(view_a["you"]["executedBet"], "W");
    assert_eq!(view_a["you"]["executedBetLabel"], "White");
    let raw_a = serde_json::to_string(&view_a).unwrap();
    assert!(!raw_a.contains("YYGG"));
    assert!(view_a.get("controls").is_none());
    let (_, view_b) = get_json(&app, &state_uri(&lobby, b)).await;
    assert_eq!(view_b["you"]["executedBetLabel"], "Green");
    assert!(!serde_json::to_string(&view_b).unwrap().contains("GWWY"));

    advance(&app, &lobby).await;
    let (status, _) = post(
        &app,
        &draws_uri,
        json!({ "token": lobby.monitor, "ambiguous": "G", "risky": "R" }),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (_, view_a) = get_json(&app, &state_uri(&lobby, a)).await;
    assert_eq!(view_a["you"]["won"], false);
    assert_eq!(view_a["you"]["payment"], "5.00");
    let (_, view_b) = get_json(&app, &state_uri(&lobby, b)).await;
    assert_eq!(view_b["you"]["won"], true);
    assert_eq!(view_b["you"]["payment"], "15.00");

    let (status, _) = call(&app, "GET", &format!("/sessions/{}/export.csv", lobby.id), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    advance(&app, &lobby).await;
    advance(&app, &lobby).await;
    let q_uri = format!("/sessions/{}/questionnaire", lobby.id);
    let (status, _) = post(&app, &q_uri, json!({ "token": a, "answer": "White" })).await;
    assert_eq!(status, StatusCode::OK);
    let closed = advance(&app, &lobby).await;
    assert_eq!(closed["phase"], "closed");
    assert!(closed["controls"]["canAdvance"] == false);

    let (_, view_a) = get_json(&app, &state_uri(&lobby, a)).await;
    let rules: Vec<&str> = view_a["roster"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|r| r["rule"].as_str())
        .collect();
    assert_eq!(rules, ["GWWY", "YYGG"]);

    let (status, csv) = call(&app, "GET", &format!("/sessions/{}/export.csv", lobby.id), None).await;
    assert_eq!(status, StatusCode::OK);
    let ds = ChoiceDataset::from_csv_reader(csv.as_bytes()).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.to_csv().unwrap(), csv);
    let table = aggregate(&ds, &Classifier::new(&Default::default())).unwrap();
    assert_eq!(table.total, 2);
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let app = router(AppState::in_memory());
    let (status, _) = get_json(&app, "/sessions/nope/state").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, created) = post(&app, "/sessions", json!({})).await;
    let id = created["sessionId"].as_str().unwrap().to_string();
    let monitor_code = created["joinCodes"]["monitor"].as_str().unwrap().to_string();
    let subject_code = created["joinCodes"]["subject"].as_str().unwrap().to_string();
    let join = format!("/sessions/{id}/join");

    let (status, _) = post(&app, &join, json!({ "code": "WRONG!" })).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, _) = call(&app, "POST", &join, Some(Value::String("{not json".into()))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", &join, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post(&app, &join, json!({ "code": 7 })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, monitor) = post(&app, &join, json!({ "code": monitor_code })).await;
    let monitor = monitor["token"].as_str().unwrap().to_string();
    let (status, err) = post(&app, &join, json!({ "code": monitor_code })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "duplicate_monitor");

    let adv = format!("/sessions/{id}/advance");
    let (status, err) = post(&app, &adv, json!({ "token": monitor })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "not_ready");

    let (_, subject) = post(&app, &join, json!({ "code": subject_code.to_lowercase() })).await;
    let subject = subject["token"].as_str().unwrap().to_string();
    let (status, err) = post(&app, &adv, json!({ "token": subject })).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(err["code"], "not_monitor");
    let (status, _) = post(&app, &adv, json!({ "token": "bogus" })).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);

    let rule = format!("/sessions/{id}/rule");
    let (status, err) = post(&app, &rule, json!({ "token": subject, "rule": "GWWY" })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "wrong_phase");
    let (status, _) = post(&app, &rule, json!({ "token": subject, "rule": "GWW" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let draws = format!("/sessions/{id}/draws");
    let (status, _) = post(&app, &draws, json!({ "token": subject, "outcome": "GG" })).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, err) = post(&app, &draws, json!({ "token": monitor, "outcome": "GG" })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "wrong_phase");

    let (status, _) = post(&app, &adv, json!({ "token": monitor })).await;
    assert_eq!(status, StatusCode::OK);
    let (status, err) = post(&app, &join, json!({ "code": subject_code })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "wrong_phase");
    let (status, err) = post(&app, &rule, json!({ "token": monitor, "rule": "GGYY" })).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(err["code"], "not_subject");
    let (status, _) = get_json(&app, &format!("/sessions/{id}/state?token=bogus")).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn each_successful_mutation_appends_one_event() {
    let state = AppState::in_memory();
    let app = router(state.clone());
    let lobby = lobby(&app, json!({ "kind": "manual" }), 1).await;
    let version = |id: &str| state.record(id).unwrap().version();
    assert_eq!(version(&lobby.id), 3);

    let before = version(&lobby.id);
    for _ in 0..3 {
        get_json(&app, &state_uri(&lobby, &lobby.monitor)).await;
    }
    assert_eq!(version(&lobby.id), before);

    advance(&app, &lobby).await;
    assert_eq!(version(&lobby.id), before + 1);
    let rule_uri = format!("/sessions/{}/rule", lobby.id);
    post(&app, &rule_uri, json!({ "token": lobby.subjects[0], "rule": "GGYY" })).await;
    assert_eq!(version(&lobby.id), before + 2);
    // a rejected call leaves the log alone
    post(&app, &rule_uri, json!({ "token": lobby.subjects[0], "rule": "GGYY" })).await;
    assert_eq!(version(&lobby.id), before + 2);

    let (_, snap) = get_json(&app, &state_uri(&lobby, &lobby.subjects[0])).await;
    assert_eq!(snap["version"], before + 2);
}

#[tokio::test]
async fn seeded_sessions_fill_in_generated_draws() {
    let app = router(AppState::in_memory());
    let lobby = lobby(&app, json!({ "kind": "seeded", "seed": 11, "green_share": "1/3" }), 1).await;
    advance(&app, &lobby).await;
    post(
        &app,
        &format!("/sessions/{}/rule", lobby.id),
        json!({ "token": lobby.subjects[0], "rule": "GGGY" }),
    )
    .await;
    advance(&app, &lobby).await;
    let draws = format!("/sessions/{}/draws", lobby.id);
    let (status, snap) = post(&app, &draws, json!({ "token": lobby.monitor })).await;
    assert_eq!(status, StatusCode::OK, "{snap}");
    let info = snap["infoDraws"].as_str().unwrap().to_string();
    advance(&app, &lobby).await;

    // a draw that disagrees with the seed is refused
    let (_, snap) = get_json(&app, &state_uri(&lobby, &lobby.monitor)).await;
    assert_eq!(snap["infoDraws"], info);
    let (status, snap) = post(&app, &draws, json!({ "token": lobby.monitor })).await;
    assert_eq!(status, StatusCode::OK);
    let recorded = snap["bettingDraws"].clone();
    let flipped = if recorded["risky"] == "W" { "R" } else { "W" };
    let (status, err) = post(
        &app,
        &draws,
        json!({ "token": lobby.monitor, "ambiguous": recorded["ambiguous"], "risky": flipped }),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT, "{err}");
    assert_eq!(err["code"], "already_recorded");
}

#[tokio::test]
async fn seeded_mismatch_is_unprocessable() {
    let app = router(AppState::in_memory());
    let lobby = lobby(&app, json!({ "kind": "seeded", "seed": 3, "green_share": "1/2" }), 1).await;
    advance(&app, &lobby).await;
    post(
        &app,
        &format!("/sessions/{}/rule", lobby.id),
        json!({ "token": lobby.subjects[0], "rule": "GGGY" }),
    )
    .await;
    advance(&app, &lobby).await;
    let draws = format!("/sessions/{}/draws", lobby.id);
    let mut mismatches = 0;
    for outcome in ["GG", "GY", "YG", "YY"] {
        let (status, body) = post(&app, &draws, json!({ "token": lobby.monitor, "outcome": outcome })).await;
        match status {
            StatusCode::OK => break,
            StatusCode::UNPROCESSABLE_ENTITY => {
                assert_eq!(body["code"], "seed_mismatch");
                mismatches += 1;
            }
            other => panic!("unexpected {other}: {body}"),
        }
    }
    assert!(mismatches < 4);
}

#[tokio::test]
async fn persisted_sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (lobby, before) = {
        let state = AppState::persistent(dir.path()).unwrap();
        let app = router(state.clone());
        let lobby = lobby(&app, json!({ "kind": "manual" }), 2).await;
        advance(&app, &lobby).await;
        post(
            &app,
            &format!("/sessions/{}/rule", lobby.id),
            json!({ "token": lobby.subjects[1], "rule": "GWWY" }),
        )
        .await;
        let (_, before) = get_json(&app, &state_uri(&lobby, &lobby.subjects[1])).await;
        (lobby, before)
    };

    let state = AppState::persistent(dir.path()).unwrap();
    assert_eq!(state.session_ids(), vec![lobby.id.clone()]);
    let app = router(state);
    let (status, after) = get_json(&app, &state_uri(&lobby, &lobby.subjects[1])).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    // old tokens keep working
    let (status, _) = post(
        &app,
        &format!("/sessions/{}/rule", lobby.id),
        json!({ "token": lobby.subjects[0], "rule": "GGYY" }),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let log = std::fs::read_to_string(dir.path().join(format!("{}.ndjson", lobby.id))).unwrap();
    assert_eq!(log.lines().count(), 7);
}

#[tokio::test]
async fn stream_and_polling_agree() {
    let state = AppState::in_memory();
    let app = router(state.clone());
    let lobby = lobby(&app, json!({ "kind": "manual" }), 1).await;
    let token = lobby.subjects[0].clone();

    let mut stream = Box::pin(state.subscribe(&lobby.id, Some(&token)).unwrap());
    use tokio_stream::StreamExt;
    let first = stream.next().await.unwrap();
    let polled: Snapshot = serde_json::from_value(get_json(&app, &state_uri(&lobby, &token)).await.1).unwrap();
    assert_eq!(first, polled);

    advance(&app, &lobby).await;
    post(
        &app,
        &format!("/sessions/{}/rule", lobby.id),
        json!({ "token": token, "rule": "GGYY" }),
    )
    .await;
    let polled: Snapshot = serde_json::from_value(get_json(&app, &state_uri(&lobby, &token)).await.1).unwrap();
    // a slow stream reader may skip versions but lands on the same snapshot
    let mut latest = stream.next().await.unwrap();
    while latest.version < polled.version {
        latest = stream.next().await.unwrap();
    }
    assert_eq!(latest, polled);
}

#[tokio::test]
async fn event_stream_endpoint_sends_current_snapshot() {
    let app = router(AppState::in_memory());
    let lobby = lobby(&app, json!({ "kind": "manual" }), 1).await;
    let uri = format!("/sessions/{}/events?token={}", lobby.id, lobby.monitor);
    let resp = app
        .clone()
        .oneshot(Request::builder().uri(&uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert!(resp.headers()[header::CONTENT_TYPE].to_str().unwrap().starts_with("text/event-stream"));
    let mut body = resp.into_body();
    let frame = body.frame().await.unwrap().unwrap().into_data().unwrap();
    let text = String::from_utf8(frame.to_vec()).unwrap();
    let data = text.lines().find_map(|l| l.strip_prefix("data: ")).unwrap();
    let streamed: Value = serde_json::from_str(data).unwrap();
    let (_, polled) = get_json(&app, &state_uri(&lobby, &lobby.monitor)).await;
    assert_eq!(streamed, polled);
    assert!(text.contains("event: snapshot"));
}

#[tokio::test]
async fn concurrent_joins_are_serialized() {
    let state = AppState::in_memory();
    let app = router(state.clone());
    let (_, created) = post(&app, "/sessions", json!({})).await;
    let id = created["sessionId"].as_str().unwrap().to_string();
    let code = created["joinCodes"]["subject"].as_str().unwrap().to_string();
    let handles: Vec<_> = (0..20)
        .map(|_| {
            let app = app.clone();
            let uri = format!("/sessions/{id}/join");
            let code = code.clone();
            tokio::spawn(async move { post(&app, &uri, json!({ "code": code })).await })
        })
        .collect();
    let mut ids = Vec::new();
    for h in handles {
        let (status, body) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        ids.push(body["participantId"].as_str().unwrap().to_string());
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 20);
    assert_eq!(state.record(&id).unwrap().version(), 21);
}
