//! X3D/H-Anim scene emission, a structural self-check for emitted scenes,
//! and a single-file HTML player page.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::AnimationDocument;
use crate::numfmt::{fixed6, fixed6_list, xml_attr};
use crate::rotation::{quaternion_to_axis_angle, Quaternion};
use crate::skeleton::{neutral_posture, JointName};

pub const X3D_MEDIA_TYPE: &str = "model/x3d+xml";
pub const HTML_MEDIA_TYPE: &str = "text/html";
pub const DEFAULT_RENDERER_URL: &str = "https://cdn.jsdelivr.net/npm/x_ite@10/dist/x_ite.min.js";
const MARKER_RADIUS: f64 = 0.012;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmissionError {
    #[error("invalid emission options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionOptions {
    pub humanoid_def_name: String,
    #[serde(rename = "loop")]
    pub loop_playback: bool,
    /// Seconds of stillness appended after the last key.
    pub cycle_padding: f64,
    pub html_wrapper: bool,
    pub renderer_url: String,
}

impl Default for EmissionOptions {
    fn default() -> Self {
        Self {
            humanoid_def_name: "Signer".into(),
            loop_playback: false,
            cycle_padding: 0.5,
            html_wrapper: false,
            renderer_url: DEFAULT_RENDERER_URL.into(),
        }
    }
}

impl EmissionOptions {
    pub fn check(&self) -> Result<(), EmissionError> {
        let name_ok = !self.humanoid_def_name.is_empty()
            && self.humanoid_def_name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            && !self.humanoid_def_name.starts_with(|c: char| c.is_ascii_digit());
        if !name_ok {
            return Err(EmissionError::InvalidOptions(format!(
                "humanoid name {:?} must be an identifier",
                self.humanoid_def_name
            )));
        }
        if !(self.cycle_padding.is_finite() && self.cycle_padding >= 0.0) {
            return Err(EmissionError::InvalidOptions(format!(
                "cycle padding {} must be a non-negative number",
                self.cycle_padding
            )));
        }
        Ok(())
    }

    fn def(&self, joint: JointName) -> String {
        format!("{}_{}", self.humanoid_def_name, joint)
    }

    fn clock(&self) -> String {
        format!("{}_Clock", self.humanoid_def_name)
    }
}

fn rotation_attr(q: Quaternion) -> String {
    let a = quaternion_to_axis_angle(q.canonical()).expect("unit rotation");
    fixed6_list(&[a.axis[0], a.axis[1], a.axis[2], a.angle])
}

struct Emitter<'a> {
    out: String,
    doc: &'a AnimationDocument,
    opts: &'a EmissionOptions,
    rest: crate::skeleton::Posture,
}

impl Emitter<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn static_rotation(&self, joint: JointName) -> Quaternion {
        match self.doc.tracks.get(&joint) {
            Some(keys) => keys[0].rotation,
            None => self.rest.get(joint),
        }
    }

    fn joint(&mut self, joint: JointName, depth: usize, container: &str, first: &mut bool) {
        let c = joint.center();
        let head = format!(
            "<HAnimJoint DEF=\"{}\" containerField=\"{container}\" name=\"{joint}\" center=\"{}\" rotation=\"{}\">",
            self.opts.def(joint),
            fixed6_list(&c),
            rotation_attr(self.static_rotation(joint)),
        );
        self.line(depth, &head);
        let seg = format!("<HAnimSegment DEF=\"{}_segment\" name=\"{joint}_segment\">", self.opts.def(joint));
        self.line(depth + 1, &seg);
        self.line(depth + 2, &format!("<Transform translation=\"{}\">", fixed6_list(&c)));
        if std::mem::take(first) {
            let marker = format!("<Shape DEF=\"{}_Marker\">", self.opts.humanoid_def_name);
            self.line(depth + 3, &marker);
            self.line(depth + 4, &format!("<Sphere radius=\"{}\"/>", fixed6(MARKER_RADIUS)));
            self.line(depth + 3, "</Shape>");
        } else {
            self.line(depth + 3, &format!("<Shape USE=\"{}_Marker\"/>", self.opts.humanoid_def_name));
        }
        self.line(depth + 2, "</Transform>");
        self.line(depth + 1, "</HAnimSegment>");
        let mut children: Vec<JointName> = joint.children().collect();
        children.sort_by_key(|j| j.as_str());
        for child in children {
            self.joint(child, depth + 1, "children", first);
        }
        self.line(depth, "</HAnimJoint>");
    }

    fn metadata(&mut self, depth: usize) {
        let h = self.opts.humanoid_def_name.clone();
        self.line(depth, &format!("<MetadataSet DEF=\"{h}_Metadata\" containerField=\"metadata\" name=\"signforge\">"));
        let d = depth + 1;
        self.line(d, &format!("<MetadataDouble containerField=\"value\" name=\"duration\" value=\"{}\"/>", fixed6(self.doc.duration)));
        self.line(d, &format!("<MetadataDouble containerField=\"value\" name=\"signing_end\" value=\"{}\"/>", fixed6(self.doc.signing_end)));
        self.line(d, "<MetadataSet containerField=\"value\" name=\"boundaries\">");
        for b in &self.doc.boundaries {
            let text = format!(
                "<MetadataDouble containerField=\"value\" name=\"{}\" value=\"{}\"/>",
                xml_attr(&b.gloss),
                fixed6_list(&[b.start, b.end])
            );
            self.line(d + 1, &text);
        }
        self.line(d, "</MetadataSet>");
        self.line(d, "<MetadataSet containerField=\"value\" name=\"anchors\">");
        for a in &self.doc.anchors {
            let text = format!(
                "<MetadataDouble containerField=\"value\" name=\"{}:{}\" value=\"{}\"/>",
                xml_attr(&a.gloss),
                a.kind,
                fixed6_list(&[a.time, a.point[0], a.point[1], a.point[2]])
            );
            self.line(d + 1, &text);
        }
        self.line(d, "</MetadataSet>");
        self.line(d, "<MetadataSet containerField=\"value\" name=\"nonmanual\">");
        for n in &self.doc.nonmanual {
            let text = format!(
                "<MetadataDouble containerField=\"value\" name=\"{}\" value=\"{}\"/>",
                n.cue,
                fixed6_list(&[n.time, n.intensity])
            );
            self.line(d + 1, &text);
        }
        self.line(d, "</MetadataSet>");
        self.line(depth, "</MetadataSet>");
    }
}

/// Renders the document as an X3D 3.3 scene. Output depends only on the
/// arguments.
pub fn emit_x3d(doc: &AnimationDocument, opts: &EmissionOptions) -> Result<String, EmissionError> {
    opts.check()?;
    let mut e = Emitter { out: String::new(), doc, opts, rest: neutral_posture() };
    let h = opts.humanoid_def_name.clone();
    e.out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    e.line(0, "<X3D profile=\"Immersive\" version=\"3.3\">");
    e.line(1, "<head>");
    e.line(2, "<component name=\"H-Anim\" level=\"1\"/>");
    e.line(1, "</head>");
    e.line(1, "<Scene>");
    e.line(2, &format!("<HAnimHumanoid DEF=\"{h}\" name=\"{h}\" version=\"2.0\">"));
    e.metadata(3);
    let mut first = true;
    e.joint(JointName::HumanoidRoot, 3, "skeleton", &mut first);
    let mut all: Vec<JointName> = JointName::ALL.to_vec();
    all.sort_by_key(|j| j.as_str());
    for j in &all {
        e.line(3, &format!("<HAnimJoint USE=\"{}\" containerField=\"joints\"/>", opts.def(*j)));
    }
    e.line(2, "</HAnimHumanoid>");

    if !doc.tracks.is_empty() {
        let cycle = doc.duration + opts.cycle_padding;
        e.line(
            2,
            &format!(
                "<TimeSensor DEF=\"{}\" cycleInterval=\"{}\" loop=\"{}\"/>",
                opts.clock(),
                fixed6(cycle),
                opts.loop_playback
            ),
        );
        let mut tracked: Vec<(&JointName, &Vec<crate::rotation::RotationKey>)> = doc.tracks.iter().collect();
        tracked.sort_by_key(|(j, _)| j.as_str());
        for (joint, keys) in &tracked {
            let times: Vec<f64> = keys.iter().map(|k| k.time / cycle).collect();
            let values: Vec<String> = keys.iter().map(|k| rotation_attr(k.rotation)).collect();
            e.line(
                2,
                &format!(
                    "<OrientationInterpolator DEF=\"{}_Interpolator\" key=\"{}\" keyValue=\"{}\"/>",
                    opts.def(**joint),
                    fixed6_list(&times),
                    values.join(", ")
                ),
            );
        }
        for (joint, _) in &tracked {
            let interp = format!("{}_Interpolator", opts.def(**joint));
            e.line(
                2,
                &format!(
                    "<ROUTE fromNode=\"{}\" fromField=\"fraction_changed\" toNode=\"{interp}\" toField=\"set_fraction\"/>",
                    opts.clock()
                ),
            );
            e.line(
                2,
                &format!(
                    "<ROUTE fromNode=\"{interp}\" fromField=\"value_changed\" toNode=\"{}\" toField=\"set_rotation\"/>",
                    opts.def(**joint)
                ),
            );
        }
    }
    e.line(1, "</Scene>");
    e.line(0, "</X3D>");
    Ok(e.out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmissionDiagnostic {
    /// DEF name of the offending node, when there is one.
    pub node: Option<String>,
    pub message: String,
}

impl fmt::Display for EmissionDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(n) => write!(f, "{n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn diag(node: Option<&str>, message: impl Into<String>) -> EmissionDiagnostic {
    EmissionDiagnostic { node: node.map(str::to_string), message: message.into() }
}

fn numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("{s:?} is not a number")))
        .collect()
}

/// Structural self-check of an X3D scene: well-formedness, DEF/USE and
/// ROUTE references, and interpolator key lists.
pub fn validate_emission(xml: &str) -> Vec<EmissionDiagnostic> {
    let doc = match roxmltree::Document::parse(xml) {
        Ok(d) => d,
        Err(e) => return vec![diag(None, format!("not well-formed: {e}"))],
    };
    let mut out = Vec::new();
    let root = doc.root_element();
    if root.tag_name().name() != "X3D" {
        out.push(diag(None, format!("root element is <{}>, expected <X3D>", root.tag_name().name())));
    }
    let mut defs = BTreeSet::new();
    for node in doc.descendants().filter(|n| n.is_element()) {
        if let Some(name) = node.attribute("USE") {
            if !defs.contains(name) {
                out.push(diag(Some(name), "USE refers to a DEF that is not declared before it"));
            }
        }
        if let Some(name) = node.attribute("DEF") {
            if !defs.insert(name) {
                out.push(diag(Some(name), "DEF declared more than once"));
            }
        }
    }
    for route in doc.descendants().filter(|n| n.has_tag_name("ROUTE")) {
        for attr in ["fromNode", "toNode"] {
            match route.attribute(attr) {
                Some(name) if defs.contains(name) => {}
                Some(name) => out.push(diag(Some(name), format!("ROUTE {attr} names an undeclared DEF"))),
                None => out.push(diag(None, format!("ROUTE without {attr}"))),
            }
        }
    }
    for interp in doc.descendants().filter(|n| n.has_tag_name("OrientationInterpolator")) {
        let name = interp.attribute("DEF");
        let keys = match numbers(interp.attribute("key").unwrap_or("")) {
            Ok(k) => k,
            Err(m) => {
                out.push(diag(name, format!("key: {m}")));
                continue;
            }
        };
        let values = match numbers(interp.attribute("keyValue").unwrap_or("")) {
            Ok(v) => v,
            Err(m) => {
                out.push(diag(name, format!("keyValue: {m}")));
                continue;
            }
        };
        if values.len() % 4 != 0 {
            out.push(diag(name, format!("keyValue has {} numbers, not a multiple of 4", values.len())));
        } else if keys.len() != values.len() / 4 {
            out.push(diag(name, format!("{} keys but {} keyValue rotations", keys.len(), values.len() / 4)));
        }
        if keys.iter().any(|k| !(0.0..=1.0).contains(k)) {
            out.push(diag(name, "key outside [0, 1]"));
        }
        if keys.windows(2).any(|w| w[1] < w[0]) {
            out.push(diag(name, "keys decrease"));
        }
    }
    out
}

/// Normalized keys and axis-angle keyValues, by target joint DEF.
pub type InterpolatorTable = BTreeMap<String, (Vec<f64>, Vec<[f64; 4]>)>;

pub fn read_interpolators(xml: &str) -> Result<InterpolatorTable, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| e.to_string())?;
    let mut targets = BTreeMap::new();
    for route in doc.descendants().filter(|n| n.has_tag_name("ROUTE")) {
        if route.attribute("toField") == Some("set_rotation") {
            if let (Some(from), Some(to)) = (route.attribute("fromNode"), route.attribute("toNode")) {
                targets.insert(from.to_string(), to.to_string());
            }
        }
    }
    let mut out = BTreeMap::new();
    for interp in doc.descendants().filter(|n| n.has_tag_name("OrientationInterpolator")) {
        let def = interp.attribute("DEF").ok_or("interpolator without DEF")?;
        let keys = numbers(interp.attribute("key").unwrap_or(""))?;
        let values = numbers(interp.attribute("keyValue").unwrap_or(""))?;
        let values = values.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
        let target = targets.get(def).cloned().unwrap_or_else(|| def.to_string());
        out.insert(target, (keys, values));
    }
    Ok(out)
}

/// A single-file page embedding the X3D scene and play/pause controls.
pub fn emit_html(doc: &AnimationDocument, opts: &EmissionOptions) -> Result<String, EmissionError> {
    let x3d = emit_x3d(doc, opts)?;
    Ok(wrap_html(&x3d, opts))
}

/// The HTML page around an already emitted scene.
pub fn wrap_html(x3d: &str, opts: &EmissionOptions) -> String {
    let mut out = String::new();
    let h = xml_attr(&opts.humanoid_def_name);
    let _ = write!(
        out,
        r#"<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>{h}</title>
<script src="{src}"></script>
<style>
body {{ font-family: sans-serif; margin: 1em; }}
x3d-canvas {{ width: 640px; height: 480px; border: 1px solid #888; }}
</style>
</head>
<body>
<x3d-canvas id="stage"></x3d-canvas>
<div>
<button id="play" type="button">Play</button>
<button id="pause" type="button">Pause</button>
</div>
<script id="scene" type="{media}">
{x3d}</script>
<script>
(function () {{
  var canvas = document.getElementById("stage");
  var source = document.getElementById("scene").textContent;
  var browser = X3D.getBrowser(canvas);
  var clock = null;
  var paused = false;
  browser.createX3DFromString(source).then(function (scene) {{
    browser.replaceWorld(scene);
    try {{ clock = scene.getNamedNode("{clock}"); }} catch (e) {{ clock = null; }}
  }});
  document.getElementById("play").onclick = function () {{
    if (!clock) return;
    if (paused) {{ clock.resumeTime = browser.currentTime; paused = false; }}
    else {{ clock.startTime = browser.currentTime; }}
  }};
  document.getElementById("pause").onclick = function () {{
    if (!clock || paused) return;
    clock.pauseTime = browser.currentTime;
    paused = true;
  }};
}})();
</script>
</body>
</html>
"#,
        src = xml_attr(&opts.renderer_url),
        media = X3D_MEDIA_TYPE,
        clock = opts.clock(),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::{axis_angle_to_quaternion, AxisAngle, RotationKey};

    fn one_track() -> AnimationDocument {
        let quarter = axis_angle_to_quaternion(AxisAngle::new([0.0, 1.0, 0.0], std::f64::consts::FRAC_PI_2)).unwrap();
        AnimationDocument {
            duration: 1.0,
            signing_end: 1.0,
            tracks: BTreeMap::from([(
                JointName::RWrist,
                vec![RotationKey::new(0.0, Quaternion::IDENTITY), RotationKey::new(1.0, quarter)],
            )]),
            ..AnimationDocument::default()
        }
    }

    #[test]
    fn empty_document_is_a_static_scene() {
        let x = emit_x3d(&AnimationDocument::default(), &EmissionOptions::default()).unwrap();
        assert!(x.contains("<HAnimHumanoid DEF=\"Signer\""));
        assert_eq!(x.matches("<OrientationInterpolator").count(), 0);
        assert_eq!(x.matches("<ROUTE").count(), 0);
        assert_eq!(x.matches("<HAnimJoint DEF=").count(), 47);
        assert_eq!(validate_emission(&x), vec![]);
    }

    #[test]
    fn normalization_arithmetic() {
        let x = emit_x3d(&one_track(), &EmissionOptions::default()).unwrap();
        assert!(x.contains("key=\"0.000000 0.666667\""), "{x}");
        assert!(x.contains("keyValue=\"0.000000 0.000000 1.000000 0.000000, 0.000000 1.000000 0.000000 1.570796\""));
        assert!(x.contains("cycleInterval=\"1.500000\""));
        assert_eq!(x.matches("<ROUTE").count(), 2);
        assert_eq!(validate_emission(&x), vec![]);
        assert_eq!(x, emit_x3d(&one_track(), &EmissionOptions::default()).unwrap());
    }

    #[test]
    fn corrupted_route_is_named() {
        let x = emit_x3d(&one_track(), &EmissionOptions::default()).unwrap();
        let bad = x.replacen("toNode=\"Signer_r_wrist\"", "toNode=\"Signer_r_wrsit\"", 1);
        let d = validate_emission(&bad);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].node.as_deref(), Some("Signer_r_wrsit"));
    }

    #[test]
    fn mismatched_counts_are_reported() {
        let x = emit_x3d(&one_track(), &EmissionOptions::default()).unwrap();
        let bad = x.replacen("key=\"0.000000 0.666667\"", "key=\"0.000000 0.333333 0.666667\"", 1);
        let d = validate_emission(&bad);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains('3') && d[0].message.contains('2'), "{}", d[0]);
        assert_eq!(validate_emission("<X3D>").len(), 1);
    }

    #[test]
    fn html_embeds_the_scene_once() {
        let opts = EmissionOptions { loop_playback: true, ..EmissionOptions::default() };
        let x = emit_x3d(&one_track(), &opts).unwrap();
        let page = emit_html(&one_track(), &opts).unwrap();
        assert_eq!(page.matches("type=\"model/x3d+xml\"").count(), 1);
        assert_eq!(page.matches("<X3D ").count(), 1);
        assert!(page.contains(&x));
        assert!(x.contains("loop=\"true\""));
        assert!(page.contains(DEFAULT_RENDERER_URL));
    }

    #[test]
    fn options_are_checked() {
        let bad = EmissionOptions { humanoid_def_name: "a b".into(), ..EmissionOptions::default() };
        assert!(emit_x3d(&one_track(), &bad).is_err());
        let bad = EmissionOptions { cycle_padding: -1.0, ..EmissionOptions::default() };
        assert!(emit_x3d(&one_track(), &bad).is_err());
    }
}
