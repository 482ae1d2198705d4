use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use serde_json::Value;
use signforge_cli::service::{Request, Response, ServiceState};
use signforge_core::compiler::TransitionPolicy;
use signforge_core::lexicon::parse_lexicon;
use signforge_core::x3d::{validate_emission, EmissionOptions};

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/lexicon.xml")
}

fn assistance() -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/assistance.json")).unwrap()
}

/// A service over a private copy of the fixture file.
fn service() -> (tempfile::TempDir, PathBuf, ServiceState) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lexicon.xml");
    std::fs::copy(fixture_path(), &path).unwrap();
    let state = ServiceState::open(&path, TransitionPolicy::default(), EmissionOptions::default()).unwrap();
    (dir, path, state)
}

fn get(state: &ServiceState, path: &str) -> Response {
    state.handle(&Request::new("GET", path))
}

fn bad_sign_xml() -> String {
    r#"<sign gloss="HELP">
  <phonology>
    <channel joint="r_shoulder">
      <key t="0" ypr="0 0 0"/>
      <key t="0.5" ypr="0 0.2 0"/>
      <key t="0.3" ypr="0 0.4 0"/>
    </channel>
  </phonology>
</sign>"#
        .to_string()
}

fn good_sign_xml(gloss: &str) -> String {
    format!(
        r#"<sign gloss="{gloss}">
  <semantics lemma="شجرة"/>
  <syntax category="noun" agreement="none"/>
  <phonology>
    <channel joint="r_shoulder">
      <key t="0" ypr="0 0 0.8"/>
      <key t="0.4" ypr="0.2 0 1.0"/>
    </channel>
  </phonology>
</sign>"#
    )
}

#[test]
fn get_sign_returns_fragment() {
    let (_d, _p, state) = service();
    let r = get(&state, "/signs/HELP");
    assert_eq!(r.status, 200);
    assert_eq!(r.header("content-type"), Some("application/xml"));
    assert!(r.text().starts_with("<sign gloss=\"HELP\">"));
    assert_eq!(r.header("ETag"), Some("\"1\""));
    assert_eq!(get(&state, "/signs/NOPE").status, 404);
    assert_eq!(get(&state, "/nothing").status, 404);
}

#[test]
fn read_endpoints() {
    let (_d, _p, state) = service();
    let summary = get(&state, "/lexicon").json_body().unwrap();
    assert_eq!(summary["language"], "LSA");
    assert_eq!(summary["revision"], 1);
    let n = summary["signs"].as_u64().unwrap() as usize;
    let signs = get(&state, "/signs").json_body().unwrap();
    assert_eq!(signs.as_array().unwrap().len(), n);
    assert!(signs.as_array().unwrap().iter().any(|s| s["gloss"] == "CEILING" && s["compound"].is_array()));
    let alphabet = get(&state, "/alphabet").json_body().unwrap();
    assert_eq!(alphabet["ب"], "FS_BA");
    assert_eq!(alphabet.as_object().unwrap().len(), 28);
    let shapes = get(&state, "/handshapes").json_body().unwrap();
    let flat = shapes.as_array().unwrap().iter().find(|s| s["name"] == "FLAT").unwrap();
    assert_eq!(flat["rotations"].as_array().unwrap().len(), 15);
}

#[test]
fn invalid_put_leaves_lexicon_unchanged() {
    let (_d, path, state) = service();
    let before_fragment = get(&state, "/signs/HELP");
    let before_file = std::fs::read(&path).unwrap();
    let r = state.handle(&Request::new("PUT", "/signs/HELP").with_body(bad_sign_xml()));
    assert_eq!(r.status, 400);
    let body = r.json_body().unwrap();
    let diags = body["diagnostics"].as_array().unwrap();
    assert!(diags.iter().any(|d| d["message"].as_str().unwrap().contains("increasing")), "{body}");
    assert_eq!(get(&state, "/signs/HELP"), before_fragment);
    assert_eq!(std::fs::read(&path).unwrap(), before_file);
    assert_eq!(state.snapshot().revision, 1);
}

#[test]
fn put_creates_then_updates_and_persists() {
    let (_d, path, state) = service();
    let r = state.handle(&Request::new("PUT", "/signs/TREE").with_header("If-Match", "\"1\"").with_body(good_sign_xml("TREE")));
    assert_eq!(r.status, 201, "{}", r.text());
    assert_eq!(r.header("ETag"), Some("\"2\""));
    let r = state.handle(&Request::new("PUT", "/signs/TREE").with_header("If-Match", "\"2\"").with_body(good_sign_xml("TREE")));
    assert_eq!(r.status, 200);
    assert_eq!(state.snapshot().revision, 3);
    // The file on disk is the served lexicon.
    let reloaded = parse_lexicon(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(reloaded.sign("TREE").is_some());
    assert_eq!(reloaded, state.snapshot().lexicon);
}

#[test]
fn stale_if_match_conflicts() {
    let (_d, _p, state) = service();
    let ok = state.handle(&Request::new("PUT", "/signs/TREE").with_header("If-Match", "1").with_body(good_sign_xml("TREE")));
    assert_eq!(ok.status, 201);
    let stale = state.handle(&Request::new("PUT", "/signs/TREE").with_header("If-Match", "1").with_body(good_sign_xml("TREE")));
    assert_eq!(stale.status, 409);
    assert_eq!(stale.json_body().unwrap()["revision"], 2);
    let stale_delete = state.handle(&Request::new("DELETE", "/signs/TREE").with_header("If-Match", "1"));
    assert_eq!(stale_delete.status, 409);
}

#[test]
fn put_gloss_must_match_path() {
    let (_d, _p, state) = service();
    let r = state.handle(&Request::new("PUT", "/signs/OAK").with_body(good_sign_xml("TREE")));
    assert_eq!(r.status, 400);
    let r = state.handle(&Request::new("PUT", "/signs/TREE").with_body("<sign gloss="));
    assert_eq!(r.status, 400);
}

#[test]
fn delete_is_validated() {
    let (_d, _p, state) = service();
    // CEILING refers to ABOVE.
    let r = state.handle(&Request::new("DELETE", "/signs/ABOVE"));
    assert_eq!(r.status, 400);
    assert!(get(&state, "/signs/ABOVE").status == 200);
    let r = state.handle(&Request::new("DELETE", "/signs/CEILING"));
    assert_eq!(r.status, 200);
    assert_eq!(get(&state, "/signs/CEILING").status, 404);
    assert_eq!(state.handle(&Request::new("DELETE", "/signs/CEILING")).status, 404);
}

#[test]
fn percent_encoded_paths_decode() {
    let (_d, _p, state) = service();
    assert_eq!(get(&state, "/signs/H%45LP").status, 200);
    assert_eq!(get(&state, "/signs/HELP?x=1").status, 200);
}

#[test]
fn methods_and_cors() {
    let (_d, _p, state) = service();
    let r = state.handle(&Request::new("POST", "/signs"));
    assert_eq!(r.status, 405);
    assert_eq!(r.header("Allow"), Some("GET"));
    let r = state.handle(&Request::new("OPTIONS", "/signs/HELP"));
    assert_eq!(r.status, 204);
    assert!(r.header("Access-Control-Allow-Methods").unwrap().contains("PUT"));
    assert_eq!(r.header("Access-Control-Allow-Origin"), Some("*"));
}

#[test]
fn compile_endpoint_emits_valid_x3d() {
    let (_d, _p, state) = service();
    let r = state.handle(&Request::new("POST", "/compile").with_body(r#"{"signs": ["BOY", "HELP", "CEILING"]}"#));
    assert_eq!(r.status, 200, "{}", r.text());
    assert_eq!(r.header("Content-Type"), Some("model/x3d+xml"));
    assert_eq!(validate_emission(&r.text()), vec![]);
    let r = state.handle(&Request::new("POST", "/compile").with_body(r#"{"signs": ["NOPE"]}"#));
    assert_eq!(r.status, 400);
    assert_eq!(r.json_body().unwrap()["stage"], "compilation");
    let r = state.handle(&Request::new("POST", "/compile").with_body("{"));
    assert_eq!(r.status, 400);
}

#[test]
fn fingerspell_endpoint() {
    let (_d, _p, state) = service();
    let r = state.handle(&Request::new("POST", "/fingerspell").with_body(r#"{"word": "كتب"}"#));
    assert_eq!(r.status, 200);
    assert_eq!(validate_emission(&r.text()), vec![]);
    let r = state.handle(&Request::new("POST", "/fingerspell").with_body(r#"{"word": "xyz"}"#));
    assert_eq!(r.status, 400);
    assert_eq!(r.json_body().unwrap()["stage"], "planning");
}

fn translate(state: &ServiceState, session: Option<&str>, sentence: &str, html: bool) -> Response {
    let mut body = serde_json::json!({ "sentences": [serde_json::from_str::<Value>(sentence).unwrap()], "html": html });
    if let Some(s) = session {
        body["session"] = Value::String(s.into());
    }
    state.handle(&Request::new("POST", "/translate").with_body(body.to_string()))
}

fn loci(r: &Response) -> Value {
    serde_json::from_str(r.header("X-Loci").unwrap()).unwrap()
}

fn anchor_points(x3d: &str) -> Vec<String> {
    x3d.lines().filter(|l| l.contains("name=\"HELP:")).map(str::to_string).collect()
}

#[test]
fn translate_session_reuses_loci() {
    let (_d, _p, state) = service();
    let first = translate(&state, Some("s1"), &assistance(), false);
    assert_eq!(first.status, 200, "{}", first.text());
    assert_eq!(validate_emission(&first.text()), vec![]);
    let table = loci(&first);
    assert_eq!(table.as_object().unwrap().len(), 2);

    // Same referents with the roles swapped: a fresh session reallocates by
    // role order, the persistent one keeps the earlier placement.
    let swapped = assistance().replace("\"r1\"", "\"tmp\"").replace("\"r2\"", "\"r1\"").replace("\"tmp\"", "\"r2\"");
    let second = translate(&state, Some("s1"), &swapped, false);
    assert_eq!(loci(&second), table);
    let fresh = translate(&state, Some("s2"), &swapped, false);
    assert_ne!(loci(&fresh), table);
    assert_eq!(anchor_points(&second.text()).len(), anchor_points(&fresh.text()).len());
    assert_ne!(anchor_points(&second.text()), anchor_points(&fresh.text()));

    // No session: nothing remembered.
    let a = translate(&state, None, &assistance(), false);
    assert_eq!(loci(&a), table);
    assert_eq!(state.session_count(), 2);
}

#[test]
fn translate_html_and_errors() {
    let (_d, _p, state) = service();
    let r = translate(&state, None, &assistance(), true);
    assert_eq!(r.status, 200);
    assert_eq!(r.header("Content-Type"), Some("text/html"));
    let r = translate(&state, None, r#"{"frame": "Flying", "elements": {"Pilot": {"lemma": "pilot", "id": "p"}}}"#, false);
    assert_eq!(r.status, 400);
    assert_eq!(r.json_body().unwrap()["stage"], "planning");
    let r = state.handle(&Request::new("POST", "/translate").with_body(r#"{"sentences": [], "bogus": 1}"#));
    assert_eq!(r.status, 400);
}

#[test]
fn x_loci_is_ascii_json() {
    let (_d, _p, state) = service();
    let sentence = assistance().replace("\"r1\"", "\"ولد\"");
    let r = translate(&state, Some("arabic"), &sentence, false);
    assert_eq!(r.status, 200);
    let raw = r.header("X-Loci").unwrap();
    assert!(raw.is_ascii());
    assert!(loci(&r).get("ولد").is_some());
}

fn http(addr: std::net::SocketAddr, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut stream = std::net::TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut text = String::new();
    stream.read_to_string(&mut text).unwrap();
    let status = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, text)
}

#[test]
fn real_server_round_trip() {
    let (_d, _p, state) = service();
    let state = Arc::new(state);
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    runtime.spawn(signforge_cli::server::serve_on(state.clone(), listener));

    let (status, text) = http(addr, "GET", "/signs/HELP", "");
    assert_eq!(status, 200);
    assert!(text.contains("<sign gloss=\"HELP\">"));
    let (status, text) = http(addr, "POST", "/compile", r#"{"signs": ["HELP"]}"#);
    assert_eq!(status, 200);
    assert!(text.to_ascii_lowercase().contains("content-type: model/x3d+xml"));
    let (status, _) = http(addr, "PUT", "/signs/HELP", &bad_sign_xml());
    assert_eq!(status, 400);
    assert_eq!(state.snapshot().revision, 1);
    let (status, _) = http(addr, "PATCH", "/signs/HELP", "");
    assert_eq!(status, 405);
    runtime.shutdown_background();
}
