use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use bifluxon_core::fit::{FitProblem, ModelKind, ModelParams};
use bifluxon_core::formats::{
    CoherenceFile, Document, FitProblemFile, FitResultFile, HeatmapFile, ParamsFile, PointsFile, SpectrumOverlay,
};
use bifluxon_service::{router, AppState, ErrorBody};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

struct Harness {
    state: Arc<AppState>,
    app: Router,
    dir: tempfile::TempDir,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("points.json");
    std::fs::copy(fixture("sample_a_points.json"), &points).unwrap();
    let state = Arc::new(AppState::new(
        HeatmapFile::read(&fixture("sample_a_heatmap.json")).unwrap(),
        ParamsFile::read(&fixture("sample_a_params.json")).unwrap(),
        PointsFile::read(&points).unwrap(),
        points,
    ));
    Harness {
        app: router(state.clone()),
        state,
        dir,
    }
}

async fn send(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn decode<T: DeserializeOwned>(bytes: &[u8]) -> T {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

fn encode_query(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

#[tokio::test]
async fn heatmap_axes_match_matrix() {
    let h = harness();
    let (status, body) = send(&h.app, Method::GET, "/api/heatmap", None).await;
    assert_eq!(status, StatusCode::OK);
    let map: HeatmapFile = decode(&body);
    assert_eq!(map.schema_version, "1");
    assert_eq!(map.magnitude.len(), map.flux.len());
    assert!(map.magnitude.iter().all(|r| r.len() == map.frequency.len()));
}

#[tokio::test]
async fn spectrum_overlay_defaults_to_heatmap_axis() {
    let h = harness();
    let (status, body) = send(&h.app, Method::GET, "/api/spectrum?levels=3", None).await;
    assert_eq!(status, StatusCode::OK);
    let o: SpectrumOverlay = decode(&body);
    assert_eq!(o.schema_version, "1");
    assert_eq!(o.flux.len(), 57);
    assert_eq!(o.lines.len(), 3);
    assert!(o.lines.iter().all(|l| l.frequency.len() == o.flux.len()));
}

#[tokio::test]
async fn spectrum_accepts_inline_params_and_model() {
    let h = harness();
    let params = encode_query(&ParamsFile::dual(0.153, 0.013, 0.157).to_canonical());
    let uri = format!("/api/spectrum?params={params}&flux=0:0.5:3&levels=3&model=dual");
    let (status, body) = send(&h.app, Method::GET, &uri, None).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let o: SpectrumOverlay = decode(&body);
    assert_eq!(o.flux, vec![0.0, 0.25, 0.5]);
}

#[tokio::test]
async fn spectrum_rejects_bad_query_with_field() {
    let h = harness();
    for (uri, field) in [
        ("/api/spectrum?levels=many", "levels"),
        ("/api/spectrum?flux=0:1", "flux"),
        ("/api/spectrum?model=quantum", "model"),
        ("/api/spectrum?params=%7B%7D", "params"),
    ] {
        let (status, body) = send(&h.app, Method::GET, uri, None).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        let e: ErrorBody = decode(&body);
        assert_eq!(e.schema_version, "1");
        assert!(e.field.as_deref().unwrap_or("").starts_with(field), "{uri}: {e:?}");
    }
}

#[tokio::test]
async fn put_points_persists_to_file() {
    let h = harness();
    let mut doc = PointsFile::read(&fixture("sample_a_points.json")).unwrap();
    doc.points.truncate(5);
    let (status, _) = send(&h.app, Method::PUT, "/api/points", Some(doc.to_canonical())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, body) = send(&h.app, Method::GET, "/api/points", None).await;
    let served: PointsFile = decode(&body);
    assert_eq!(served.points.len(), 5);
    let on_disk = PointsFile::read(&h.dir.path().join("points.json")).unwrap();
    assert_eq!(on_disk, doc);
}

#[tokio::test]
async fn put_points_rejects_malformed_payloads() {
    let h = harness();
    let bad_type =
        r#"{"schema_version": "1", "source": null, "points": [{"phi_ext": "zero", "i": 0, "j": 1, "f_ij": 3.0}]}"#;
    let (status, body) = send(&h.app, Method::PUT, "/api/points", Some(bad_type.into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let e: ErrorBody = decode(&body);
    assert_eq!(e.field.as_deref(), Some("points[0].phi_ext"));

    let bad_label =
        r#"{"schema_version": "1", "source": null, "points": [{"phi_ext": 0.0, "i": 2, "j": 1, "f_ij": 3.0}]}"#;
    let (status, body) = send(&h.app, Method::PUT, "/api/points", Some(bad_label.into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let e: ErrorBody = decode(&body);
    assert_eq!(e.field.as_deref(), Some("points"));

    let wrong_schema = r#"{"schema_version": "7", "source": null, "points": []}"#;
    let (status, body) = send(&h.app, Method::PUT, "/api/points", Some(wrong_schema.into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(decode::<ErrorBody>(&body).field.as_deref(), Some("schema_version"));

    // rejected writes leave the stored set alone
    let (_, body) = send(&h.app, Method::GET, "/api/points", None).await;
    let original = PointsFile::read(&fixture("sample_a_points.json")).unwrap();
    assert_eq!(decode::<PointsFile>(&body), original);
}

#[tokio::test]
async fn coherence_rows_respect_t2_bound() {
    let h = harness();
    let (status, body) = send(&h.app, Method::GET, "/api/coherence?flux=0:0.5:6", None).await;
    assert_eq!(status, StatusCode::OK);
    let c: CoherenceFile = decode(&body);
    assert_eq!(c.schema_version, "1");
    assert_eq!(c.rows.len(), 6);
    assert!(c.rows.iter().all(|r| r.t2 <= 2.0 * r.t1));
}

#[tokio::test]
async fn coherence_without_noise_block_is_rejected() {
    let h = harness();
    let params = ParamsFile::read(&fixture("sample_a_params.json")).unwrap();
    let stripped = ParamsFile { noise: None, ..params };
    let uri = format!("/api/coherence?params={}", encode_query(&stripped.to_canonical()));
    let (status, body) = send(&h.app, Method::GET, &uri, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(decode::<ErrorBody>(&body).field.as_deref(), Some("noise"));
}

fn synthetic_fit_request() -> String {
    let points = PointsFile::read(&fixture("synthetic_points.json")).unwrap().points;
    let truth = ParamsFile::read(&fixture("sample_a_params.json"))
        .unwrap()
        .model_params(ModelKind::Joint)
        .unwrap()
        .values();
    let init: Vec<f64> = truth
        .iter()
        .zip([1.03, 0.97, 1.03, 1.0, 1.05])
        .map(|(v, s)| v * s)
        .collect();
    let problem = FitProblem::new(points, ModelParams::from_values(ModelKind::Joint, &init).unwrap());
    FitProblemFile::new(problem).to_canonical()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn fit_converges_and_second_request_conflicts() {
    let h = harness();
    let body = synthetic_fit_request();
    let app = h.app.clone();
    let first = tokio::spawn({
        let body = body.clone();
        async move { send(&app, Method::POST, "/api/fit", Some(body)).await }
    });
    while !h.state.fit_in_progress() {
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    let (status, err) = send(&h.app, Method::POST, "/api/fit", Some(body)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(decode::<ErrorBody>(&err).schema_version, "1");

    let (status, bytes) = first.await.unwrap();
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&bytes));
    let result: FitResultFile = decode(&bytes);
    assert_eq!(result.schema_version, "1");
    assert!(result.result.converged);
    assert!(!h.state.fit_in_progress());
}

#[tokio::test]
async fn fit_rejects_underdetermined_problem() {
    let h = harness();
    let mut problem: FitProblemFile = serde_json::from_str(&synthetic_fit_request()).unwrap();
    problem.problem.points.truncate(3);
    let (status, _) = send(&h.app, Method::POST, "/api/fit", Some(problem.to_canonical())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(!h.state.fit_in_progress());
}
