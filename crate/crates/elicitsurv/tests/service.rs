use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use elicitsurv::config::{config_to_json, load_config, parse_config};
use elicitsurv::pipeline::Analysis;
use elicitsurv::service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value, bytes)
}

const TABLE1: [(&str, [f64; 3]); 4] = [
    ("S1_t0", [0.37, 0.40, 0.45]),
    ("delta11", [0.26, 0.30, 0.35]),
    ("delta21", [0.01, 0.05, 0.10]),
    ("delta22", [0.25, 0.30, 0.37]),
];

async fn session_with_table1(app: &Router) -> String {
    let (status, v, _) = call(app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = v["id"].as_str().unwrap().to_string();
    for (name, q) in TABLE1 {
        let (status, _, _) = call(
            app,
            "PUT",
            &format!("/sessions/{id}/quantities/{name}"),
            Some(json!({"q25": q[0], "q50": q[1], "q75": q[2]})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
    }
    id
}

#[tokio::test]
async fn put_quantity_returns_the_fit() {
    let app = router(AppState::in_memory());
    let (_, v, _) = call(&app, "POST", "/sessions", Some(json!({"t0": 5.0, "t1": 10.0}))).await;
    let id = v["id"].as_str().unwrap();
    let (status, fit, _) = call(
        &app,
        "PUT",
        &format!("/sessions/{id}/quantities/S1_t0"),
        Some(json!({"q25": 0.37, "q50": 0.40, "q75": 0.45})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let d = &fit["distribution"];
    assert_eq!(d["type"], "beta");
    assert!((d["alpha"].as_f64().unwrap() - 27.09).abs() < 0.5, "{fit}");
    assert!((d["beta"].as_f64().unwrap() - 39.58).abs() < 0.5, "{fit}");
    assert!(fit["residual"].as_f64().unwrap() < 0.01);
}

#[tokio::test]
async fn invalid_quartiles_are_422_with_the_field() {
    let app = router(AppState::in_memory());
    let (_, v, _) = call(&app, "POST", "/sessions", None).await;
    let id = v["id"].as_str().unwrap();
    let put = |name: &'static str, body: Value| {
        let app = app.clone();
        let uri = format!("/sessions/{id}/quantities/{name}");
        async move { call(&app, "PUT", &uri, Some(body)).await }
    };

    let (status, err, _) = put("S1_t0", json!({"q25": 0.4, "q50": 0.3, "q75": 0.5})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "q50");
    assert_eq!(err["code"], "invalid_input");
    assert!(err["message"].as_str().unwrap().contains("median"));

    let (status, err, _) = put("delta11", json!({"q25": 0.2, "q50": 0.5, "q75": 1.2})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "q75");

    let (status, err, _) = put("delta99", json!({"q25": 0.2, "q50": 0.3, "q75": 0.4})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "name");

    let (status, err, _) = call(&app, "GET", "/sessions/nope/export", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
}

#[tokio::test]
async fn gompertz_preview_matches_the_expected_acceptance() {
    let app = router(AppState::in_memory());
    let id = session_with_table1(&app).await;
    let uri = format!("/sessions/{id}/preview?family=gompertz&seed=3");
    let (status, p, first) = call(&app, "GET", &uri, None).await;
    assert_eq!(status, StatusCode::OK, "{p}");
    let acc = p["acceptance_rate"].as_f64().unwrap();
    assert!((acc - 0.23).abs() < 0.05, "{acc}");
    assert_eq!(p["n"], 20_000);

    let band = p["survival"][0].as_array().unwrap();
    assert_eq!(band.len(), 61);
    assert_eq!(band[0]["median"], 1.0);
    assert_eq!(band.last().unwrap()["t"], 30.0);
    for w in band.windows(2) {
        assert!(w[1]["median"].as_f64() <= w[0]["median"].as_f64());
        assert!(w[1]["lower"].as_f64() <= w[1]["upper"].as_f64());
    }
    let q = p["mean_quartiles"][0].as_array().unwrap();
    assert!(q[0].as_f64() <= q[1].as_f64() && q[1].as_f64() <= q[2].as_f64());
    let violations = p["violations"].as_array().unwrap();
    assert!(violations.iter().any(|v| v["constraint"] == "gompertz_theta_above_lambda"), "{p}");

    let (_, _, second) = call(&app, "GET", &uri, None).await;
    assert_eq!(first, second);
}

#[tokio::test]
async fn preview_cache_is_invalidated_by_a_put() {
    let app = router(AppState::in_memory());
    let id = session_with_table1(&app).await;
    let uri = format!("/sessions/{id}/preview?family=weibull&seed=1&n=4000");
    let (_, before, _) = call(&app, "GET", &uri, None).await;
    call(
        &app,
        "PUT",
        &format!("/sessions/{id}/quantities/S1_t0"),
        Some(json!({"q25": 0.5, "q50": 0.55, "q75": 0.6})),
    )
    .await;
    let (_, after, _) = call(&app, "GET", &uri, None).await;
    assert_ne!(before["survival"], after["survival"]);
}

#[tokio::test]
async fn infeasible_spec_is_409_naming_the_constraint() {
    let app = router(AppState::in_memory());
    let (_, v, _) = call(&app, "POST", "/sessions", None).await;
    let id = v["id"].as_str().unwrap().to_string();

    let (status, err, _) = call(&app, "GET", &format!("/sessions/{id}/preview?family=weibull"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "incomplete");

    // delta11 always exceeds S1(t0), so S1(t1) is never positive.
    for (name, q) in [
        ("S1_t0", [0.10, 0.12, 0.14]),
        ("delta11", [0.50, 0.55, 0.60]),
        ("delta21", [0.01, 0.05, 0.10]),
        ("delta22", [0.05, 0.06, 0.07]),
    ] {
        let (status, _, _) = call(
            &app,
            "PUT",
            &format!("/sessions/{id}/quantities/{name}"),
            Some(json!({"q25": q[0], "q50": q[1], "q75": q[2]})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
    }
    let (status, err, _) = call(&app, "GET", &format!("/sessions/{id}/preview?family=weibull"), None).await;
    assert_eq!(status, StatusCode::CONFLICT, "{err}");
    assert_eq!(err["code"], "infeasible");
    assert_eq!(err["field"], "s1_t1_positive");
}

#[tokio::test]
async fn export_runs_through_the_pipeline() {
    let app = router(AppState::in_memory());
    let id = session_with_table1(&app).await;
    let (status, cfg, bytes) = call(&app, "GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK, "{cfg}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exported.json");
    std::fs::write(&path, &bytes).unwrap();
    let mut run = load_config(&path).unwrap();
    assert_eq!(parse_config(&config_to_json(&run)).unwrap(), run);
    assert_eq!(run.prior.quantities.len(), 4);

    run.n_draws = 2000;
    run.hellinger.n = 2000;
    run.hellinger.j = 100;
    run.mh.iterations = 1000;
    run.mh.burn_in = 200;
    run.families = vec![elicitsurv_core::ModelFamily::Exponential, elicitsurv_core::ModelFamily::Lognormal];
    let a = Analysis::new(run, dir.path(), false).unwrap();
    let bundle = elicitsurv::pipeline::write_report(&a, &dir.path().join("out")).unwrap();
    assert!(bundle.paths.iter().all(|p| p.exists()));
}

#[tokio::test]
async fn sessions_persist_to_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::with_snapshots(dir.path().to_path_buf()).unwrap();
    let app = router(state);
    let id = session_with_table1(&app).await;
    assert!(dir.path().join(format!("{id}.json")).exists());

    let reloaded = router(AppState::with_snapshots(dir.path().to_path_buf()).unwrap());
    let (status, s, _) = call(&reloaded, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["quantities"].as_object().unwrap().len(), 4);
}
