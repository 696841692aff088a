use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ontolink_core::embed::snore::{snore_fit, SnoreParams};
use ontolink_core::graph_io::LoadedGraph;
use ontolink_core::projection::{project, Mode};
use ontolink_core::recommend::candidates;
use ontolink_core::triples::parse_str;
use ontolink_core::{fixtures, HeteroGraph};
use ontolink_server::{router, ServerConfig, Session, API_SCHEMA};
use serde_json::{json, Value};
use tower::ServiceExt;

const SUGAR: &str = "http://example.org/food#sugar";

/// Pecan-pie projection plus a 2-community block model.
fn workbench() -> LoadedGraph {
    let mut h: HeteroGraph = project(&parse_str(fixtures::PECAN_PIE).unwrap(), Mode::Rules)
        .unwrap()
        .graph;
    let g = fixtures::stochastic_block(120, 2, 0.15, 0.01, 42);
    for i in 0..120 {
        h.add_node(format!("http://example.org/sbm/n{i}"));
    }
    for (u, v) in g.edges() {
        h.add_edge(
            &format!("http://example.org/sbm/n{u}"),
            "http://example.org/sbm/linked",
            &format!("http://example.org/sbm/n{v}"),
        );
    }
    LoadedGraph::from_hetero(h)
}

fn session_with(config: ServerConfig) -> Arc<Session> {
    let loaded = workbench();
    let emb = snore_fit(
        &loaded.simple,
        &SnoreParams::default(),
        42,
        loaded.nodes().names().to_vec(),
    )
    .unwrap();
    Arc::new(Session::new(loaded, emb, config).unwrap())
}

fn session() -> Arc<Session> {
    session_with(ServerConfig {
        seed: 42,
        ..Default::default()
    })
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => request
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => request.body(Body::empty()).unwrap(),
    };
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes)
        .unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, "GET", uri, None).await
}

fn encode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                (b as char).to_string()
            }
            _ => format!("%{b:02X}"),
        })
        .collect()
}

/// Checks `value` against the subset of JSON Schema used by the API
/// document: `$ref`, `type`, `required`, `properties`, `items`, `enum`.
fn check(schema: &Value, value: &Value, root: &Value, path: &str) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return check(&root["$defs"][name], value, root, path);
    }
    if let Some(types) = schema.get("type") {
        let allowed: Vec<&str> = match types {
            Value::String(t) => vec![t.as_str()],
            Value::Array(ts) => ts.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: bad type declaration")),
        };
        let ok = allowed.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: expected {allowed:?}, got {value}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{path}: {value} not in {options:?}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required.iter().filter_map(Value::as_str) {
            if value.get(key).is_none() {
                return Err(format!("{path}: missing '{key}'"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (
        schema.get("properties").and_then(Value::as_object),
        value.as_object(),
    ) {
        for (key, sub) in props {
            if let Some(v) = obj.get(key) {
                check(sub, v, root, &format!("{path}.{key}"))?;
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            check(items, v, root, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn conforms(def: &str, value: &Value) {
    let root: Value = serde_json::from_str(API_SCHEMA).unwrap();
    let schema = json!({ "$ref": format!("#/$defs/{def}") });
    if let Err(e) = check(&schema, value, &root, def) {
        panic!("{e}\n{value:#}");
    }
}

#[test]
fn schema_document_is_consistent() {
    let root: Value = serde_json::from_str(API_SCHEMA).unwrap();
    let defs = root["$defs"].as_object().unwrap();
    fn refs(v: &Value, out: &mut Vec<String>) {
        match v {
            Value::Object(m) => {
                if let Some(Value::String(r)) = m.get("$ref") {
                    out.push(r.trim_start_matches("#/$defs/").to_string());
                }
                m.values().for_each(|x| refs(x, out));
            }
            Value::Array(a) => a.iter().for_each(|x| refs(x, out)),
            _ => {}
        }
    }
    let mut all = Vec::new();
    refs(&root, &mut all);
    for r in all {
        assert!(defs.contains_key(&r), "dangling reference {r}");
    }
    assert_eq!(root["endpoints"].as_object().unwrap().len(), 8);
}

#[test]
fn schema_checker_rejects_mismatches() {
    let root: Value = serde_json::from_str(API_SCHEMA).unwrap();
    let schema = json!({ "$ref": "#/$defs/Candidate" });
    assert!(check(
        &schema,
        &json!({"u": "a", "v": "b", "score": 1.0, "kind": "missing"}),
        &root,
        ""
    )
    .is_ok());
    assert!(check(
        &schema,
        &json!({"u": "a", "v": "b", "score": 1.0}),
        &root,
        ""
    )
    .is_err());
    assert!(check(
        &schema,
        &json!({"u": "a", "v": "b", "score": "x", "kind": "missing"}),
        &root,
        ""
    )
    .is_err());
    assert!(check(
        &schema,
        &json!({"u": "a", "v": "b", "score": 1.0, "kind": "other"}),
        &root,
        ""
    )
    .is_err());
}

#[tokio::test]
async fn stats_and_schema_routes() {
    let app = router(session());
    let (status, body) = get(&app, "/stats").await;
    assert_eq!(status, StatusCode::OK);
    conforms("Stats", &body);
    assert_eq!(body["nodes"], 122);
    assert_eq!(body["stale"], false);
    let (status, body) = get(&app, "/api-schema.json").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], "1.0.0");
}

#[tokio::test]
async fn node_search() {
    let app = router(session());
    let (status, body) = get(&app, "/nodes?q=sugar").await;
    assert_eq!(status, StatusCode::OK);
    conforms("NodePage", &body);
    assert_eq!(body["items"][0]["iri"], SUGAR);

    let (_, body) = get(&app, "/nodes?q=").await;
    assert_eq!(body["total"], 0);
    let (_, body) = get(&app, "/nodes?q=no-such-term").await;
    assert_eq!(body["items"].as_array().unwrap().len(), 0);

    let (_, body) = get(&app, "/nodes?q=sbm&limit=5&offset=10").await;
    assert_eq!(body["total"], 120);
    assert_eq!(body["items"].as_array().unwrap().len(), 5);
    assert_eq!(body["items"][0]["iri"], "http://example.org/sbm/n10");
    let (status, _) = get(&app, "/nodes?q=a&limit=minus").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn candidates_match_library_and_explanations_sum() {
    let session = session();
    let app = router(session.clone());
    let (status, body) = get(&app, "/candidates?kind=missing&k=25").await;
    assert_eq!(status, StatusCode::OK);
    conforms("CandidateList", &body);

    let snap = session.snapshot();
    let expected = candidates(&snap.embedding, &snap.graph, 25, None).unwrap();
    let got = body["candidates"].as_array().unwrap();
    assert_eq!(got.len(), 25);
    for (g, e) in got.iter().zip(&expected.missing) {
        assert_eq!(g["u"], session.nodes.name(e.u));
        assert_eq!(g["v"], session.nodes.name(e.v));
        assert!((g["score"].as_f64().unwrap() - e.score).abs() <= 1e-12);
    }

    for c in got.iter().take(10) {
        let uri = format!(
            "/explain/local?u={}&v={}",
            encode(c["u"].as_str().unwrap()),
            encode(c["v"].as_str().unwrap())
        );
        let (status, e) = get(&app, &uri).await;
        assert_eq!(status, StatusCode::OK);
        conforms("LocalExplanation", &e);
        let sum: f64 = e["contributions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x["value"].as_f64().unwrap())
            .sum();
        assert!((sum - c["score"].as_f64().unwrap()).abs() <= 1e-9);
    }

    let (status, body) = get(&app, "/candidates?kind=redundant&k=5").await;
    assert_eq!(status, StatusCode::OK);
    conforms("CandidateList", &body);
    let scores: Vec<f64> = body["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["score"].as_f64().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
}

#[tokio::test]
async fn subset_candidates_touch_selected_nodes() {
    let app = router(session());
    let a = "http://example.org/sbm/n3";
    let b = "http://example.org/sbm/n90";
    let (status, body) = get(
        &app,
        &format!("/candidates?k=12&nodes={},{}", encode(a), encode(b)),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    for c in body["candidates"].as_array().unwrap() {
        assert!(
            [a, b].contains(&c["u"].as_str().unwrap())
                || [a, b].contains(&c["v"].as_str().unwrap())
        );
    }
}

#[tokio::test]
async fn request_errors() {
    let app = router(session());
    let (status, body) = get(&app, "/candidates?kind=sideways").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    conforms("Error", &body);
    let (status, body) = get(&app, "/candidates?nodes=http%3A%2F%2Fnowhere").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_node");
    let (status, _) = get(&app, &format!("/explain/local?u={}&v=x", encode(SUGAR))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&app, "/explain/local?u=only").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let request = Request::builder()
        .method("POST")
        .uri("/feedback")
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        "POST",
        "/feedback",
        Some(json!({"accept": [{"u": "a"}]})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        "POST",
        "/feedback",
        Some(json!({"accept": [{"u": SUGAR, "v": "http://nowhere"}]})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn feedback_flow_and_reembed() {
    let dir = tempfile::tempdir().unwrap();
    let journal_path = dir.path().join("journal.ndjson");
    let session = session_with(ServerConfig {
        journal: Some(journal_path.clone()),
        seed: 42,
        ..Default::default()
    });
    let app = router(session.clone());

    let (_, body) = get(&app, "/candidates?k=3").await;
    let top = body["candidates"][0].clone();
    let edge = json!({"u": top["u"], "v": top["v"]});
    let (status, body) = call(&app, "POST", "/feedback", Some(json!({ "accept": [edge] }))).await;
    assert_eq!(status, StatusCode::OK);
    conforms("FeedbackResponse", &body);
    assert_eq!(body["stale"], true);

    let (_, body) = get(&app, "/candidates?k=3").await;
    assert_eq!(body["stale"], true);
    assert!(body["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| !(c["u"] == top["u"] && c["v"] == top["v"])));

    // one good edge, one already present: partial commit with details
    let snap = session.snapshot();
    let (a, b) = snap.graph.edges().next().unwrap();
    let existing = json!({"u": session.nodes.name(a), "v": session.nodes.name(b)});
    let fresh = json!({"u": body["candidates"][0]["u"], "v": body["candidates"][0]["v"]});
    let (status, body) = call(
        &app,
        "POST",
        "/feedback",
        Some(json!({ "accept": [existing, fresh] })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    conforms("FeedbackConflict", &body);
    assert_eq!(body["details"]["errors"].as_array().unwrap().len(), 1);
    assert_eq!(body["details"]["applied"].as_array().unwrap().len(), 1);

    let (_, journal) = get(&app, "/journal").await;
    conforms("Journal", &journal);
    assert_eq!(journal["entries"].as_array().unwrap().len(), 2);

    let (status, body) = call(&app, "POST", "/reembed", None).await;
    assert_eq!(status, StatusCode::OK);
    conforms("ReembedResponse", &body);
    assert_eq!(body["stale"], false);
    let (_, stats) = get(&app, "/stats").await;
    assert_eq!(stats["stale"], false);
    assert_eq!(stats["embedding"]["version"], 1);
    assert_eq!(stats["edges"], stats["loaded_edges"].as_u64().unwrap() + 2);

    // replaying the journal from the loaded snapshot reproduces the graph
    let loaded = workbench();
    let emb = snore_fit(
        &loaded.simple,
        &SnoreParams::default(),
        42,
        loaded.nodes().names().to_vec(),
    )
    .unwrap();
    let restarted = Session::new(
        loaded,
        emb,
        ServerConfig {
            journal: Some(journal_path),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(restarted.snapshot().graph, session.snapshot().graph);
    assert!(restarted.snapshot().stale);
    assert_eq!(restarted.journal().await, session.journal().await);
}

#[tokio::test]
async fn rejecting_an_edge_removes_it() {
    let session = session();
    let app = router(session.clone());
    let (_, body) = get(&app, "/candidates?kind=redundant&k=1").await;
    let weakest = body["candidates"][0].clone();
    let (status, _) = call(
        &app,
        "POST",
        "/feedback",
        Some(json!({"reject": [{"u": weakest["u"], "v": weakest["v"]}]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (_, stats) = get(&app, "/stats").await;
    assert_eq!(
        stats["edges"].as_u64().unwrap() + 1,
        stats["loaded_edges"].as_u64().unwrap()
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn readers_never_see_half_a_batch() {
    let session = session();
    let app = router(session.clone());
    let before = session.snapshot().graph.edge_count() as u64;
    let (_, body) = get(&app, "/candidates?k=40").await;
    let batch: Vec<Value> = body["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| json!({"u": c["u"], "v": c["v"]}))
        .collect();

    let readers: Vec<_> = (0..8)
        .map(|_| {
            let app = app.clone();
            tokio::spawn(async move {
                let mut seen = Vec::new();
                for _ in 0..30 {
                    let (_, stats) = get(&app, "/stats").await;
                    seen.push(stats["edges"].as_u64().unwrap());
                }
                seen
            })
        })
        .collect();
    let (status, _) = call(&app, "POST", "/feedback", Some(json!({ "accept": batch }))).await;
    assert_eq!(status, StatusCode::OK);
    for r in readers {
        for edges in r.await.unwrap() {
            assert!(edges == before || edges == before + 40, "{edges}");
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn writes_are_refused_while_reembedding() {
    let session = session_with(ServerConfig {
        seed: 42,
        snore: Some(SnoreParams {
            walks_per_node: 200_000,
            ..Default::default()
        }),
        ..Default::default()
    });
    let app = router(session.clone());
    let (_, body) = get(&app, "/candidates?k=1").await;
    let edge = json!({"u": body["candidates"][0]["u"], "v": body["candidates"][0]["v"]});
    let background = {
        let app = app.clone();
        tokio::spawn(async move { call(&app, "POST", "/reembed", None).await })
    };
    let deadline = Instant::now() + Duration::from_secs(10);
    while !session.is_reembedding() {
        assert!(Instant::now() < deadline, "refit never started");
        tokio::task::yield_now().await;
    }
    let (status, body) = call(&app, "POST", "/feedback", Some(json!({ "accept": [edge] }))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["code"], "busy");
    let (status, _) = call(&app, "POST", "/reembed", None).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (_, stats) = get(&app, "/stats").await;
    assert_eq!(stats["reembedding"], true);

    let (status, _) = background.await.unwrap();
    assert_eq!(status, StatusCode::OK);
    assert!(!session.is_reembedding());
}

#[tokio::test]
async fn global_explanation_head() {
    let app = router(session());
    let (status, body) = get(&app, "/explain/global?top=5").await;
    assert_eq!(status, StatusCode::OK);
    conforms("GlobalExplanation", &body);
    let features = body["features"].as_array().unwrap();
    assert_eq!(features.len(), 5);
    let t: Vec<f64> = features
        .iter()
        .map(|f| f["t"].as_f64().unwrap().abs())
        .collect();
    assert!(t.windows(2).all(|w| w[0] >= w[1]));
    assert!(features.iter().all(|f| f["se"].as_f64().unwrap() > 0.0));
}

#[tokio::test]
async fn static_files_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>workbench</h1>").unwrap();
    let app = router(session_with(ServerConfig {
        static_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    }));
    let (status, body) = get(&app, "/index.html").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, Value::String("<h1>workbench</h1>".into()));
    let (status, _) = get(&app, "/stats").await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread")]
async fn candidates_respond_quickly_at_ontology_scale() {
    let store = parse_str(&fixtures::synthetic_ontology(40_000, 42)).unwrap();
    let loaded = LoadedGraph::from_hetero(project(&store, Mode::Rules).unwrap().graph);
    let emb = snore_fit(
        &loaded.simple,
        &SnoreParams::default(),
        42,
        loaded.nodes().names().to_vec(),
    )
    .unwrap();
    let app = router(Arc::new(
        Session::new(loaded, emb, ServerConfig::default()).unwrap(),
    ));
    let start = Instant::now();
    let (status, body) = get(&app, "/candidates?kind=missing&k=100").await;
    let elapsed = start.elapsed();
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["candidates"].as_array().unwrap().len(), 100);
    assert!(elapsed < Duration::from_secs(2), "{elapsed:?}");
}
