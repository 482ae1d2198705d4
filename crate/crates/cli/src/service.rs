//! Transport-independent request handling for the lexicon service.
//!
//! Readers take an `Arc` snapshot of the lexicon and never block writers for
//! longer than a pointer swap. Writers are serialized by `writer`, build and
//! validate a complete new lexicon, persist it, then publish it.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use indexmap::IndexMap;
use percent_encoding::percent_decode_str;
use serde::Deserialize;
use serde_json::{json, Value};
use signforge_core::compiler::{AnimationDocument, TransitionPolicy};
use signforge_core::interlingua::{
    compile_glosses, fingerspell_document, translate_all, InterlinguaDocument, LociMap,
};
use signforge_core::lexicon::{
    parse_lexicon, parse_sign_fragment, serialize_lexicon, serialize_sign, validate, Diagnostic,
    Lexicon, LexiconError,
};
use signforge_core::rotation::quaternion_to_ypr_lenient;
use signforge_core::x3d::{
    emit_html, emit_x3d, validate_emission, EmissionOptions, HTML_MEDIA_TYPE, X3D_MEDIA_TYPE,
};

pub const MAX_SESSIONS: usize = 256;
pub const JSON_MEDIA_TYPE: &str = "application/json";
pub const XML_MEDIA_TYPE: &str = "application/xml";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Request {
    pub fn new(method: &str, path: &str) -> Self {
        Self { method: method.to_string(), path: path.to_string(), headers: Vec::new(), body: Vec::new() }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    pub fn with_body(mut self, body: impl Into<Vec<u8>>) -> Self {
        self.body = body.into();
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Response {
    fn new(status: u16, content_type: &str, body: impl Into<Vec<u8>>) -> Self {
        Self { status, headers: vec![("Content-Type".into(), content_type.into())], body: body.into() }
    }

    fn json(status: u16, value: &Value) -> Self {
        let mut body = serde_json::to_vec_pretty(value).expect("JSON values serialize");
        body.push(b'\n');
        Self::new(status, JSON_MEDIA_TYPE, body)
    }

    fn error(status: u16, message: impl Into<String>) -> Self {
        Self::json(status, &json!({ "error": message.into() }))
    }

    fn staged_error(status: u16, stage: &str, message: impl Into<String>) -> Self {
        Self::json(status, &json!({ "error": message.into(), "stage": stage }))
    }

    fn diagnostics(status: u16, message: &str, diags: &[Diagnostic]) -> Self {
        Self::json(status, &json!({ "error": message, "diagnostics": diags }))
    }

    fn lexicon_error(e: &LexiconError) -> Self {
        match e {
            LexiconError::Invalid(d) => Self::diagnostics(400, "sign is invalid", d),
            other => Self::error(400, other.to_string()),
        }
    }

    fn with_header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.push((name.to_string(), value.into()));
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    pub fn json_body(&self) -> Option<Value> {
        serde_json::from_slice(&self.body).ok()
    }
}

/// An immutable, validated lexicon and the revision it was published under.
#[derive(Debug)]
pub struct Snapshot {
    pub lexicon: Lexicon,
    pub revision: u64,
}

pub struct ServiceState {
    path: Option<PathBuf>,
    snapshot: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    sessions: Mutex<IndexMap<String, Arc<Mutex<LociMap>>>>,
    pub policy: TransitionPolicy,
    pub emission: EmissionOptions,
}

impl ServiceState {
    /// Loads and validates the lexicon file; writes go back to the same path.
    pub fn open(path: &Path, policy: TransitionPolicy, emission: EmissionOptions) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let lexicon = parse_lexicon(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut state = Self::in_memory(lexicon, policy, emission)?;
        state.path = Some(path.to_path_buf());
        Ok(state)
    }

    /// A service whose writes are not persisted.
    pub fn in_memory(lexicon: Lexicon, policy: TransitionPolicy, emission: EmissionOptions) -> Result<Self, String> {
        let errors: Vec<_> = validate(&lexicon).into_iter().filter(Diagnostic::is_error).collect();
        if let Some(first) = errors.first() {
            return Err(format!("lexicon is invalid: {first}"));
        }
        policy.check().map_err(|e| e.to_string())?;
        emission.check().map_err(|e| e.to_string())?;
        Ok(Self {
            path: None,
            snapshot: RwLock::new(Arc::new(Snapshot { lexicon, revision: 1 })),
            writer: Mutex::new(()),
            sessions: Mutex::new(IndexMap::new()),
            policy,
            emission,
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session lock").len()
    }

    fn publish(&self, lexicon: Lexicon, revision: u64) -> Result<(), String> {
        if let Some(path) = &self.path {
            persist(path, &serialize_lexicon(&lexicon))?;
        }
        *self.snapshot.write().expect("snapshot lock") = Arc::new(Snapshot { lexicon, revision });
        Ok(())
    }

    /// Most-recently-used session table, evicting the oldest past the bound.
    fn session(&self, id: &str) -> Arc<Mutex<LociMap>> {
        let mut sessions = self.sessions.lock().expect("session lock");
        let entry = match sessions.shift_remove(id) {
            Some(e) => e,
            None => Arc::new(Mutex::new(LociMap::new())),
        };
        sessions.insert(id.to_string(), entry.clone());
        while sessions.len() > MAX_SESSIONS {
            sessions.shift_remove_index(0);
        }
        entry
    }

    pub fn handle(&self, req: &Request) -> Response {
        let resp = self.route(req);
        log::info!("{} {} -> {}", req.method, req.path, resp.status);
        resp.with_header("Access-Control-Allow-Origin", "*")
            .with_header("Access-Control-Expose-Headers", "ETag, X-Loci")
    }

    fn route(&self, req: &Request) -> Response {
        let path = req.path.split(['?', '#']).next().unwrap_or("");
        let segments: Vec<String> = path
            .trim_matches('/')
            .split('/')
            .filter(|s| !s.is_empty())
            .map(|s| percent_decode_str(s).decode_utf8_lossy().into_owned())
            .collect();
        let segs: Vec<&str> = segments.iter().map(String::as_str).collect();
        let allowed: &[&str] = match segs.as_slice() {
            ["lexicon"] | ["signs"] | ["alphabet"] | ["handshapes"] => &["GET"],
            ["signs", _] => &["GET", "PUT", "DELETE"],
            ["compile"] | ["translate"] | ["fingerspell"] => &["POST"],
            _ => return Response::error(404, format!("no such resource: {path}")),
        };
        let method = req.method.to_ascii_uppercase();
        if method == "OPTIONS" {
            let mut methods = allowed.to_vec();
            methods.push("OPTIONS");
            return Response::new(204, "text/plain", Vec::new())
                .with_header("Allow", methods.join(", "))
                .with_header("Access-Control-Allow-Methods", methods.join(", "))
                .with_header("Access-Control-Allow-Headers", "Content-Type, If-Match");
        }
        if !allowed.contains(&method.as_str()) {
            return Response::error(405, format!("{method} not allowed on {path}"))
                .with_header("Allow", allowed.join(", "));
        }
        match (method.as_str(), segs.as_slice()) {
            ("GET", ["lexicon"]) => self.get_lexicon(),
            ("GET", ["signs"]) => self.list_signs(),
            ("GET", ["signs", g]) => self.get_sign(g),
            ("PUT", ["signs", g]) => self.put_sign(g, req),
            ("DELETE", ["signs", g]) => self.delete_sign(g, req),
            ("GET", ["alphabet"]) => self.get_alphabet(),
            ("GET", ["handshapes"]) => self.get_handshapes(),
            ("POST", ["compile"]) => self.compile(req),
            ("POST", ["translate"]) => self.translate(req),
            ("POST", ["fingerspell"]) => self.fingerspell(req),
            _ => unreachable!("allowed methods cover every route"),
        }
    }

    fn get_lexicon(&self) -> Response {
        let snap = self.snapshot();
        Response::json(
            200,
            &json!({
                "language": snap.lexicon.language(),
                "signs": snap.lexicon.len(),
                "revision": snap.revision,
            }),
        )
        .with_header("ETag", etag(snap.revision))
    }

    fn list_signs(&self) -> Response {
        let snap = self.snapshot();
        let signs: Vec<Value> = snap
            .lexicon
            .signs()
            .map(|s| {
                json!({
                    "gloss": s.gloss,
                    "category": s.category(),
                    "agreement": s.agreement(),
                    "lemmas": s.semantics.lemmas,
                    "frame": s.semantics.frame,
                    "compound": s.compound,
                })
            })
            .collect();
        Response::json(200, &Value::Array(signs)).with_header("ETag", etag(snap.revision))
    }

    fn get_sign(&self, gloss: &str) -> Response {
        let snap = self.snapshot();
        match snap.lexicon.sign(gloss) {
            Some(sign) => Response::new(200, XML_MEDIA_TYPE, serialize_sign(sign)).with_header("ETag", etag(snap.revision)),
            None => Response::error(404, format!("unknown gloss {gloss:?}")),
        }
    }

    fn put_sign(&self, gloss: &str, req: &Request) -> Response {
        let Ok(text) = std::str::from_utf8(&req.body) else {
            return Response::error(400, "body is not UTF-8");
        };
        let sign = match parse_sign_fragment(text) {
            Ok(s) => s,
            Err(e) => return Response::lexicon_error(&e),
        };
        if sign.gloss != gloss {
            return Response::error(400, format!("body gloss {:?} does not match path gloss {gloss:?}", sign.gloss));
        }
        let _guard = self.writer.lock().expect("writer lock");
        let snap = self.snapshot();
        if let Some(resp) = check_revision(req, snap.revision) {
            return resp;
        }
        let created = snap.lexicon.sign(gloss).is_none();
        let next = snap.lexicon.with_sign(sign);
        self.commit(next, snap.revision, if created { 201 } else { 200 }, gloss)
    }

    fn delete_sign(&self, gloss: &str, req: &Request) -> Response {
        let _guard = self.writer.lock().expect("writer lock");
        let snap = self.snapshot();
        if let Some(resp) = check_revision(req, snap.revision) {
            return resp;
        }
        match snap.lexicon.without_sign(gloss) {
            Some(next) => self.commit(next, snap.revision, 200, gloss),
            None => Response::error(404, format!("unknown gloss {gloss:?}")),
        }
    }

    // Caller holds the writer lock.
    fn commit(&self, next: Lexicon, revision: u64, status: u16, gloss: &str) -> Response {
        let errors: Vec<Diagnostic> = validate(&next).into_iter().filter(Diagnostic::is_error).collect();
        if !errors.is_empty() {
            return Response::diagnostics(400, "change would leave the lexicon invalid", &errors);
        }
        let revision = revision + 1;
        if let Err(e) = self.publish(next, revision) {
            log::error!("{e}");
            return Response::error(500, e);
        }
        Response::json(status, &json!({ "gloss": gloss, "revision": revision })).with_header("ETag", etag(revision))
    }

    fn get_alphabet(&self) -> Response {
        let snap = self.snapshot();
        let map: serde_json::Map<String, Value> =
            snap.lexicon.alphabet().iter().map(|(c, g)| (c.to_string(), Value::String(g.clone()))).collect();
        Response::json(200, &Value::Object(map))
    }

    fn get_handshapes(&self) -> Response {
        let snap = self.snapshot();
        let shapes: Vec<Value> = snap
            .lexicon
            .handshapes()
            .iter()
            .map(|(name, shape)| {
                let ypr: Vec<[f64; 3]> = shape
                    .rotations
                    .iter()
                    .map(|q| {
                        let e = quaternion_to_ypr_lenient(*q);
                        [e.yaw, e.pitch, e.roll]
                    })
                    .collect();
                json!({ "name": name, "rotations": ypr })
            })
            .collect();
        Response::json(200, &Value::Array(shapes))
    }

    fn emit(&self, doc: &AnimationDocument, html: bool) -> Response {
        let x3d = match emit_x3d(doc, &self.emission) {
            Ok(x) => x,
            Err(e) => return Response::staged_error(500, "emission", e.to_string()),
        };
        let diags = validate_emission(&x3d);
        if let Some(d) = diags.first() {
            log::error!("emitted scene failed validation: {d}");
            return Response::staged_error(500, "emission", d.to_string());
        }
        if html {
            match emit_html(doc, &self.emission) {
                Ok(page) => Response::new(200, HTML_MEDIA_TYPE, page),
                Err(e) => Response::staged_error(500, "emission", e.to_string()),
            }
        } else {
            Response::new(200, X3D_MEDIA_TYPE, x3d)
        }
    }

    fn compile(&self, req: &Request) -> Response {
        let body: CompileBody = match parse_body(req) {
            Ok(b) => b,
            Err(resp) => return resp,
        };
        let snap = self.snapshot();
        match compile_glosses(&body.signs, &snap.lexicon, &self.policy) {
            Ok(doc) => self.emit(&doc, body.html),
            Err(e) => Response::staged_error(400, "compilation", e.to_string()),
        }
    }

    fn translate(&self, req: &Request) -> Response {
        let body: TranslateBody = match parse_body(req) {
            Ok(b) => b,
            Err(resp) => return resp,
        };
        let snap = self.snapshot();
        let session = body.session.as_deref().map(|id| self.session(id));
        // Holding the session lock serializes translations within one session.
        let mut guard = session.as_ref().map(|s| s.lock().expect("session lock"));
        let existing = guard.as_deref().cloned().unwrap_or_default();
        let translation = match translate_all(&body.sentences, &snap.lexicon, &existing, &self.policy) {
            Ok(t) => t,
            Err(e) => return Response::staged_error(400, &e.stage().to_string(), e.to_string()),
        };
        for w in translation.warnings() {
            log::warn!("{w}");
        }
        let resp = self.emit(&translation.document, body.html);
        if resp.status != 200 {
            return resp;
        }
        if let Some(g) = guard.as_deref_mut() {
            *g = translation.loci.clone();
        }
        let loci = serde_json::to_string(&translation.loci).expect("loci serialize");
        let mut resp = resp.with_header("X-Loci", ascii_json(&loci));
        for w in translation.warnings() {
            resp = resp.with_header("X-Warning", ascii_json(w));
        }
        resp
    }

    fn fingerspell(&self, req: &Request) -> Response {
        let body: FingerspellBody = match parse_body(req) {
            Ok(b) => b,
            Err(resp) => return resp,
        };
        let snap = self.snapshot();
        match fingerspell_document(&body.word, &snap.lexicon, &self.policy) {
            Ok(doc) => self.emit(&doc, body.html),
            Err(e) => Response::staged_error(400, &e.stage().to_string(), e.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompileBody {
    signs: Vec<String>,
    #[serde(default)]
    html: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TranslateBody {
    #[serde(default)]
    session: Option<String>,
    sentences: Vec<InterlinguaDocument>,
    #[serde(default)]
    html: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerspellBody {
    word: String,
    #[serde(default)]
    html: bool,
}

fn parse_body<T: for<'de> Deserialize<'de>>(req: &Request) -> Result<T, Response> {
    serde_json::from_slice(&req.body).map_err(|e| Response::error(400, format!("invalid request body: {e}")))
}

fn etag(revision: u64) -> String {
    format!("\"{revision}\"")
}

/// `None` when the request may proceed against `current`.
fn check_revision(req: &Request, current: u64) -> Option<Response> {
    let raw = req.header("If-Match")?.trim();
    if raw == "*" {
        return None;
    }
    let tag = raw.trim_start_matches("W/").trim_matches('"');
    match tag.parse::<u64>() {
        Ok(r) if r == current => None,
        Ok(r) => Some(
            Response::json(409, &json!({ "error": format!("revision {r} is stale, current is {current}"), "revision": current }))
                .with_header("ETag", etag(current)),
        ),
        Err(_) => Some(Response::error(400, format!("If-Match {raw:?} is not a revision"))),
    }
}

/// Escapes every non-ASCII character so the text is a legal header value.
pub fn ascii_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii() && !c.is_ascii_control() {
            out.push(c);
        } else {
            let mut buf = [0u16; 2];
            for unit in c.encode_utf16(&mut buf) {
                out.push_str(&format!("\\u{unit:04x}"));
            }
        }
    }
    out
}

/// Writes via a temporary file in the same directory and renames it into place.
fn persist(path: &Path, text: &str) -> Result<(), String> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| format!("cannot write {}: {e}", dir.display()))?;
    tmp.write_all(text.as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    tmp.persist(path).map_err(|e| format!("cannot replace {}: {e}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_json_escapes_arabic_and_astral() {
        assert_eq!(ascii_json("{\"r1\":1}"), "{\"r1\":1}");
        assert_eq!(ascii_json("ب"), "\\u0628");
        assert_eq!(ascii_json("😀"), "\\ud83d\\ude00");
        let v: String = serde_json::from_str(&format!("\"{}\"", ascii_json("ولد"))).unwrap();
        assert_eq!(v, "ولد");
    }

    #[test]
    fn if_match_forms() {
        let r = |v: &str| Request::new("PUT", "/signs/X").with_header("if-match", v);
        assert!(check_revision(&Request::new("PUT", "/"), 3).is_none());
        assert!(check_revision(&r("\"3\""), 3).is_none());
        assert!(check_revision(&r("W/\"3\""), 3).is_none());
        assert!(check_revision(&r("*"), 3).is_none());
        assert_eq!(check_revision(&r("2"), 3).unwrap().status, 409);
        assert_eq!(check_revision(&r("abc"), 3).unwrap().status, 400);
    }

    #[test]
    fn sessions_are_bounded_lru() {
        let state = ServiceState::in_memory(Lexicon::empty("X"), TransitionPolicy::default(), EmissionOptions::default()).unwrap();
        let first = state.session("s0");
        first.lock().unwrap().insert("r", [0.0, 1.0, 0.0]);
        for k in 1..MAX_SESSIONS {
            state.session(&format!("s{k}"));
        }
        // Touch s0 so s1 becomes the oldest.
        state.session("s0");
        state.session("extra");
        assert_eq!(state.session_count(), MAX_SESSIONS);
        let sessions = state.sessions.lock().unwrap();
        assert!(sessions.contains_key("s0"));
        assert!(!sessions.contains_key("s1"));
        assert_eq!(sessions["s0"].lock().unwrap().len(), 1);
    }
}
