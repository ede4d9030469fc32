use std::net::SocketAddr;
use std::path::Path;

use base64::Engine;
use dropmeter::server::{router, AnalyzeResponse, ServerConfig};
use dropmeter::{analyze_image, CardOptions};
use dropmeter_core::{decode_bytes, encode_png, generate_card, SyntheticCardSpec};
use reqwest::multipart::{Form, Part};
use reqwest::StatusCode;

const B64: base64::engine::general_purpose::GeneralPurpose =
    base64::engine::general_purpose::STANDARD;

async fn start(config: ServerConfig) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(&config);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

fn card_png(fixture: &str) -> (Vec<u8>, SyntheticCardSpec) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/cards")
        .join(fixture);
    let spec = SyntheticCardSpec::load(&path).unwrap();
    let (card, _) = generate_card(&spec).unwrap();
    (encode_png(&card).unwrap(), spec)
}

fn form(png: &[u8], fields: &[(&str, &str)]) -> Form {
    let mut form = Form::new().part(
        "image",
        Part::bytes(png.to_vec())
            .file_name("card.png")
            .mime_str("image/png")
            .unwrap(),
    );
    for (k, v) in fields {
        form = form.text(k.to_string(), v.to_string());
    }
    form
}

async fn post(addr: SocketAddr, form: Form) -> reqwest::Response {
    reqwest::Client::new()
        .post(format!("http://{addr}/api/analyze"))
        .multipart(form)
        .send()
        .await
        .unwrap()
}

fn strip_timestamp(resp: &mut AnalyzeResponse) {
    resp.report.provenance.timestamp = None;
}

#[tokio::test]
async fn health_reports_version() {
    let addr = start(ServerConfig::default()).await;
    let resp = reqwest::get(format!("http://{addr}/api/health"))
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["status"], "ok");
    let version = body["version"].as_str().unwrap();
    let parts: Vec<&str> = version.split('.').collect();
    assert_eq!(parts.len(), 3);
    assert!(parts.iter().all(|p| p.parse::<u64>().is_ok()), "{version}");
}

#[tokio::test]
async fn root_serves_a_page() {
    let addr = start(ServerConfig::default()).await;
    let resp = reqwest::get(format!("http://{addr}/")).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert!(resp.text().await.unwrap().contains("/api/analyze"));
}

#[tokio::test]
async fn root_serves_ui_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>ui</h1>").unwrap();
    let addr = start(ServerConfig {
        ui_dir: Some(dir.path().to_path_buf()),
        ..ServerConfig::default()
    })
    .await;
    let body = reqwest::get(format!("http://{addr}/"))
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(body, "<h1>ui</h1>");
    let health = reqwest::get(format!("http://{addr}/api/health"))
        .await
        .unwrap();
    assert_eq!(health.status(), StatusCode::OK);
}

#[tokio::test]
async fn cors_allows_any_origin() {
    let addr = start(ServerConfig::default()).await;
    let resp = reqwest::Client::new()
        .get(format!("http://{addr}/api/health"))
        .header("origin", "http://localhost:5173")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}

#[tokio::test]
async fn analyze_multipart_defaults() {
    let addr = start(ServerConfig::default()).await;
    let (png, _) = card_png("dumbbell.toml");
    let resp = post(
        addr,
        form(&png, &[("card_width_mm", "5"), ("card_height_mm", "3")]),
    )
    .await;
    assert_eq!(resp.status(), StatusCode::OK);
    let body: AnalyzeResponse = resp.json().await.unwrap();
    assert_eq!(body.report.summary.drop_count, 2);
    assert_eq!(body.report.parameters.bin_threshold, 0.35);
    assert_eq!(body.report.parameters.marker_threshold, 0.17);
    assert_eq!(body.report.provenance.input.as_deref(), Some("card.png"));
    assert!(body.report.provenance.timestamp.is_some());
    assert!(body.overlay_png_base64.is_none());
}

#[tokio::test]
async fn marker_threshold_moves_the_count() {
    let addr = start(ServerConfig::default()).await;
    let (png, _) = card_png("dumbbell.toml");
    let mut counts = Vec::new();
    for t in ["0.9", "0.5", "0.05"] {
        let fields = [
            ("card_width_mm", "5"),
            ("card_height_mm", "3"),
            ("marker_threshold", t),
        ];
        let body: AnalyzeResponse = post(addr, form(&png, &fields)).await.json().await.unwrap();
        counts.push(body.report.summary.drop_count);
    }
    assert_eq!(counts, [1, 2, 1]);
}

#[tokio::test]
async fn overlay_and_export_on_request() {
    let addr = start(ServerConfig::default()).await;
    let (png, _) = card_png("dumbbell.toml");
    let fields = [
        ("card_width_mm", "5"),
        ("card_height_mm", "3"),
        ("overlay", "true"),
        ("export", "csv"),
    ];
    let body: AnalyzeResponse = post(addr, form(&png, &fields)).await.json().await.unwrap();
    let overlay = B64.decode(body.overlay_png_base64.unwrap()).unwrap();
    let overlay = decode_bytes(&overlay).unwrap();
    let original = decode_bytes(&png).unwrap();
    assert_eq!(
        (overlay.width(), overlay.height()),
        (original.width(), original.height())
    );
    assert_ne!(overlay, original);
    let csv = body.export.unwrap();
    assert!(csv.starts_with("drops,"));
}

#[tokio::test]
async fn bad_threshold_is_400() {
    let addr = start(ServerConfig::default()).await;
    let (png, _) = card_png("dumbbell.toml");
    for fields in [
        vec![("bin_threshold", "1.5")],
        vec![("marker_threshold", "-0.1")],
        vec![("bin_threshold", "abc")],
        vec![("correct", "1")],
        vec![("no_such_field", "1")],
    ] {
        let resp = post(addr, form(&png, &fields)).await;
        assert_eq!(resp.status(), StatusCode::BAD_REQUEST, "{fields:?}");
        let body: serde_json::Value = resp.json().await.unwrap();
        assert!(body["error"].is_string());
    }
}

#[tokio::test]
async fn bad_threshold_wins_over_bad_image() {
    let addr = start(ServerConfig::default()).await;
    let resp = post(addr, form(b"not an image", &[("bin_threshold", "1.5")])).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn missing_image_is_400() {
    let addr = start(ServerConfig::default()).await;
    let resp = post(addr, Form::new().text("bin_threshold", "0.3")).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn aspect_mismatch_is_400() {
    let addr = start(ServerConfig::default()).await;
    let (png, _) = card_png("dumbbell.toml");
    let resp = post(addr, form(&png, &[])).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn undecodable_image_is_422() {
    let addr = start(ServerConfig::default()).await;
    let resp = post(addr, form(b"\x89PNG\r\n\x1a\ntruncated", &[])).await;
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let resp = post(addr, form(b"plain text", &[])).await;
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn oversized_payload_is_413() {
    let addr = start(ServerConfig {
        max_body_bytes: 64 * 1024,
        ..ServerConfig::default()
    })
    .await;
    let big = vec![0u8; 256 * 1024];
    let resp = post(addr, form(&big, &[])).await;
    assert_eq!(resp.status(), StatusCode::PAYLOAD_TOO_LARGE);

    let json = serde_json::json!({ "image_base64": B64.encode(&big) });
    let resp = reqwest::Client::new()
        .post(format!("http://{addr}/api/analyze"))
        .json(&json)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn default_limit_admits_a_large_card() {
    // A full-size card at 600 dpi is a few megabytes of PNG, above axum's
    // built-in 2 MiB default.
    let addr = start(ServerConfig::default()).await;
    let spec = SyntheticCardSpec::new(76_000.0, 26_000.0, 600.0).with_disks(400.0, 50);
    let (card, _) = generate_card(&spec).unwrap();
    let mut png = encode_png(&card).unwrap();
    // Pad past 2 MiB; the decoder stops reading at IEND.
    png.resize(png.len().max(3 * 1024 * 1024), 0);
    let resp = post(addr, form(&png, &[])).await;
    assert_eq!(
        resp.status(),
        StatusCode::OK,
        "{}",
        resp.text().await.unwrap()
    );
}

#[tokio::test]
async fn json_body_matches_multipart() {
    let addr = start(ServerConfig::default()).await;
    let (png, _) = card_png("dumbbell.toml");
    let fields = [
        ("card_width_mm", "5"),
        ("card_height_mm", "3"),
        ("marker_threshold", "0.3"),
    ];
    let mut a: AnalyzeResponse = post(addr, form(&png, &fields)).await.json().await.unwrap();
    let json = serde_json::json!({
        "image_base64": B64.encode(&png),
        "filename": "card.png",
        "card_width_mm": 5.0,
        "card_height_mm": 3.0,
        "marker_threshold": 0.3,
    });
    let resp = reqwest::Client::new()
        .post(format!("http://{addr}/api/analyze"))
        .json(&json)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let mut b: AnalyzeResponse = resp.json().await.unwrap();
    strip_timestamp(&mut a);
    strip_timestamp(&mut b);
    assert_eq!(a.report, b.report);
}

#[tokio::test]
async fn malformed_json_is_400() {
    let addr = start(ServerConfig::default()).await;
    let client = reqwest::Client::new();
    for body in [
        r#"{"image_base64": "@@@"}"#,
        r#"{"bin_threshold": 0.3}"#,
        "{",
    ] {
        let resp = client
            .post(format!("http://{addr}/api/analyze"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), StatusCode::BAD_REQUEST, "{body}");
    }
}

#[tokio::test]
async fn repeated_requests_are_identical() {
    let addr = start(ServerConfig::default()).await;
    let (png, _) = card_png("hoechst_500.toml");
    let fields = [
        ("card_width_mm", "20"),
        ("card_height_mm", "10"),
        ("overlay", "1"),
    ];
    let mut first: AnalyzeResponse = post(addr, form(&png, &fields)).await.json().await.unwrap();
    // An unrelated request in between must not influence the next response.
    let (other, _) = card_png("dumbbell.toml");
    let _ = post(
        addr,
        form(&other, &[("card_width_mm", "5"), ("card_height_mm", "3")]),
    )
    .await;
    let mut second: AnalyzeResponse = post(addr, form(&png, &fields)).await.json().await.unwrap();
    strip_timestamp(&mut first);
    strip_timestamp(&mut second);
    assert_eq!(
        serde_json::to_string(&first).unwrap(),
        serde_json::to_string(&second).unwrap()
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn health_stays_up_during_analysis() {
    let addr = start(ServerConfig::default()).await;
    let spec = SyntheticCardSpec::new(76_000.0, 26_000.0, 1200.0).with_disks(300.0, 400);
    let (card, _) = generate_card(&spec).unwrap();
    let png = encode_png(&card).unwrap();

    let slow = tokio::spawn(async move { post(addr, form(&png, &[])).await.status() });
    tokio::time::sleep(std::time::Duration::from_millis(100)).await;
    let mut saw_in_flight = false;
    for _ in 0..20 {
        let health = reqwest::get(format!("http://{addr}/api/health"))
            .await
            .unwrap();
        assert_eq!(health.status(), StatusCode::OK);
        saw_in_flight |= !slow.is_finished();
        tokio::time::sleep(std::time::Duration::from_millis(10)).await;
    }
    assert!(
        saw_in_flight,
        "analysis finished before health could be probed"
    );
    assert_eq!(slow.await.unwrap(), StatusCode::OK);
}

#[tokio::test]
async fn api_report_matches_library_and_cli_export() {
    let addr = start(ServerConfig::default()).await;
    let (png, spec) = card_png("hoechst_250.toml");
    let fields = [
        ("card_width_mm", "20"),
        ("card_height_mm", "10"),
        ("export", "json"),
    ];
    let mut api: AnalyzeResponse = post(addr, form(&png, &fields)).await.json().await.unwrap();

    let opts = CardOptions {
        card_width_mm: spec.card_width_um / 1000.0,
        card_height_mm: spec.card_height_um / 1000.0,
        ..CardOptions::default()
    };
    let local = analyze_image(&decode_bytes(&png).unwrap(), &opts, Some("card.png"), None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("card.png");
    std::fs::write(&image, &png).unwrap();
    let out = dir.path().join("report.json");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_dropmeter"))
        .args([
            "analyze",
            "--card-width-mm",
            "20",
            "--card-height-mm",
            "10",
            "--out",
        ])
        .arg(&out)
        .arg(&image)
        .status()
        .unwrap();
    assert!(status.success());
    let cli_text = std::fs::read_to_string(&out).unwrap();

    let drop_timestamp = |text: &str| {
        text.lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        drop_timestamp(api.export.as_deref().unwrap()),
        drop_timestamp(&cli_text)
    );

    strip_timestamp(&mut api);
    assert_eq!(api.report, local.report);
}
