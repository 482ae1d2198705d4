//! Lexicon XML reader and writer.
//!
//! Angles are yaw-pitch-roll radians in the file and quaternions in memory.
//! The writer is deterministic: signs sorted by gloss, attributes in a fixed
//! order, numbers with six fractional digits.

use std::collections::BTreeMap;
use std::fmt::Write;

use roxmltree::{Document, Node};

use super::{
    validate, Anchor, AnchorKind, AnchorTarget, Diagnostic, HandshapeEvent, JointChannel,
    Lexicon, LexiconError, LocusPlaceholder, NonmanualEvent, Phonology, Semantics, SignEntry,
    Syntax,
};
use crate::numfmt::{fixed6, fixed_list, xml_attr};
use crate::rotation::{quaternion_to_ypr_lenient, ypr_to_quaternion, EulerYpr, Quaternion, RotationKey};
use crate::skeleton::{Handshape, HandshapeInventory, HandshapeName, JointName, Side};

const LEMMA_SEPARATOR: char = '|';

struct Reader<'a, 'input> {
    doc: &'a Document<'input>,
    diags: Vec<Diagnostic>,
}

impl<'a, 'input> Reader<'a, 'input> {
    fn new(doc: &'a Document<'input>) -> Self {
        Self { doc, diags: Vec::new() }
    }

    fn at(&self, node: Node<'_, '_>) -> String {
        let pos = self.doc.text_pos_at(node.range().start);
        format!("line {}:{}", pos.row, pos.col)
    }

    fn error(&mut self, gloss: Option<&str>, field: &str, node: Node<'_, '_>, message: impl AsRef<str>) {
        let message = format!("{} ({})", message.as_ref(), self.at(node));
        self.diags.push(Diagnostic::error(gloss, field, message));
    }

    fn elements<'n>(&mut self, node: Node<'n, 'input>, gloss: Option<&str>, field: &str, allowed: &[&str]) -> Vec<Node<'n, 'input>> {
        let mut out = Vec::new();
        for child in node.children() {
            if child.is_element() {
                let name = child.tag_name().name();
                if allowed.contains(&name) {
                    out.push(child);
                } else {
                    self.error(gloss, field, child, format!("unexpected element <{name}>"));
                }
            } else if child.is_text() && !child.text().unwrap_or("").trim().is_empty() {
                self.error(gloss, field, child, "unexpected text content");
            }
        }
        out
    }

    fn check_attrs(&mut self, node: Node<'_, '_>, gloss: Option<&str>, field: &str, allowed: &[&str]) {
        for a in node.attributes() {
            if !allowed.contains(&a.name()) {
                self.error(gloss, field, node, format!("unexpected attribute {:?}", a.name()));
            }
        }
    }

    fn required<'n>(&mut self, node: Node<'n, 'input>, gloss: Option<&str>, field: &str, attr: &str) -> Option<&'n str> {
        let v = node.attribute(attr);
        if v.is_none() {
            self.error(gloss, field, node, format!("missing attribute {attr:?}"));
        }
        v
    }

    fn number(&mut self, node: Node<'_, 'input>, gloss: Option<&str>, field: &str, attr: &str) -> Option<f64> {
        let text = self.required(node, gloss, field, attr)?;
        match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.error(gloss, &format!("{field}@{attr}"), node, format!("{text:?} is not a finite number"));
                None
            }
        }
    }

    fn triple(&mut self, node: Node<'_, 'input>, gloss: Option<&str>, field: &str, attr: &str) -> Option<[f64; 3]> {
        let text = self.required(node, gloss, field, attr)?;
        let parts: Vec<_> = text.split_whitespace().map(str::parse::<f64>).collect();
        match parts.as_slice() {
            [Ok(a), Ok(b), Ok(c)] if a.is_finite() && b.is_finite() && c.is_finite() => Some([*a, *b, *c]),
            _ => {
                self.error(gloss, &format!("{field}@{attr}"), node, format!("{text:?} is not three finite numbers"));
                None
            }
        }
    }

    fn ypr(&mut self, node: Node<'_, 'input>, gloss: Option<&str>, field: &str) -> Option<Quaternion> {
        let [y, p, r] = self.triple(node, gloss, field, "ypr")?;
        ypr_to_quaternion(EulerYpr::new(y, p, r)).ok()
    }

    fn keyword<T: std::str::FromStr<Err = String>>(&mut self, node: Node<'_, 'input>, gloss: Option<&str>, field: &str, attr: &str) -> Option<T> {
        let text = self.required(node, gloss, field, attr)?;
        match text.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(gloss, &format!("{field}@{attr}"), node, e);
                None
            }
        }
    }

    fn joint(&mut self, node: Node<'_, 'input>, gloss: Option<&str>, field: &str, attr: &str) -> Option<JointName> {
        let text = self.required(node, gloss, field, attr)?;
        match text.parse::<JointName>() {
            Ok(j) => Some(j),
            Err(e) => {
                self.error(gloss, &format!("{field}@{attr}"), node, e.to_string());
                None
            }
        }
    }

    fn handshapes(&mut self, node: Node<'_, 'input>) -> HandshapeInventory {
        let mut inv = HandshapeInventory::new();
        self.check_attrs(node, None, "handshapes", &[]);
        for hs in self.elements(node, None, "handshapes", &["handshape"]) {
            self.check_attrs(hs, None, "handshape", &["name"]);
            let Some(name) = self.required(hs, None, "handshape", "name") else { continue };
            let field = format!("handshape[{name}]");
            let name = HandshapeName::new(name);
            if inv.contains(&name) {
                self.error(None, &field, hs, "duplicate handshape name");
                continue;
            }
            let mut shape = Handshape::default();
            let mut seen = [false; 15];
            for j in self.elements(hs, None, &field, &["joint"]) {
                self.check_attrs(j, None, &field, &["name", "ypr"]);
                let Some(joint) = self.joint(j, None, &field, "name") else { continue };
                let Some(q) = self.ypr(j, None, &field) else { continue };
                let Some((side, slot)) = joint.finger_slot() else {
                    self.error(None, &field, j, format!("{joint} is not a finger joint"));
                    continue;
                };
                if std::mem::replace(&mut seen[slot], true) {
                    self.error(None, &field, j, format!("finger slot of {joint} given twice"));
                }
                // Stored for the right hand; left-hand authoring is mirrored.
                shape.rotations[slot] = match side {
                    Side::Right => q,
                    Side::Left => q.mirror_x(),
                };
            }
            inv.insert(name, shape);
        }
        inv
    }

    fn alphabet(&mut self, node: Node<'_, 'input>) -> BTreeMap<char, String> {
        let mut out = BTreeMap::new();
        self.check_attrs(node, None, "alphabet", &[]);
        for letter in self.elements(node, None, "alphabet", &["letter"]) {
            self.check_attrs(letter, None, "alphabet/letter", &["char", "gloss"]);
            let (Some(ch), Some(gloss)) = (
                self.required(letter, None, "alphabet/letter", "char"),
                self.required(letter, None, "alphabet/letter", "gloss"),
            ) else {
                continue;
            };
            let mut chars = ch.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => {
                    if out.insert(c, gloss.to_string()).is_some() {
                        self.error(None, "alphabet/letter", letter, format!("letter {c:?} mapped twice"));
                    }
                }
                _ => self.error(None, "alphabet/letter@char", letter, format!("{ch:?} is not a single character")),
            }
        }
        out
    }

    fn sign(&mut self, node: Node<'_, 'input>) -> Option<SignEntry> {
        self.check_attrs(node, None, "sign", &["gloss"]);
        let gloss = self.required(node, None, "sign", "gloss")?.to_string();
        let g = Some(gloss.as_str());
        let mut entry = SignEntry {
            gloss: gloss.clone(),
            semantics: Semantics::default(),
            syntax: None,
            phonology: None,
            compound: None,
        };
        let mut seen = Vec::new();
        for child in self.elements(node, g, "sign", &["semantics", "syntax", "phonology", "compound"]) {
            let name = child.tag_name().name();
            if seen.contains(&name) {
                self.error(g, name, child, format!("<{name}> given more than once"));
                continue;
            }
            seen.push(name);
            match name {
                "semantics" => entry.semantics = self.semantics(child, g),
                "syntax" => entry.syntax = self.syntax(child, g),
                "phonology" => entry.phonology = Some(self.phonology(child, g)),
                "compound" => entry.compound = Some(self.compound(child, g)),
                _ => unreachable!(),
            }
        }
        Some(entry)
    }

    fn semantics(&mut self, node: Node<'_, 'input>, g: Option<&str>) -> Semantics {
        self.check_attrs(node, g, "semantics", &["lemma", "frame", "role", "subject", "object"]);
        self.elements(node, g, "semantics", &[]);
        let owned = |v: Option<&str>| v.map(str::to_string);
        Semantics {
            lemmas: node
                .attribute("lemma")
                .map(|l| {
                    l.split(LEMMA_SEPARATOR)
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default(),
            frame: owned(node.attribute("frame")),
            role: owned(node.attribute("role")),
            subject_role: owned(node.attribute("subject")),
            object_role: owned(node.attribute("object")),
        }
    }

    fn syntax(&mut self, node: Node<'_, 'input>, g: Option<&str>) -> Option<Syntax> {
        self.check_attrs(node, g, "syntax", &["category", "agreement"]);
        self.elements(node, g, "syntax", &[]);
        let category = self.keyword(node, g, "syntax", "category");
        let agreement = match node.attribute("agreement") {
            None => Some(super::Agreement::None),
            Some(_) => self.keyword(node, g, "syntax", "agreement"),
        };
        Some(Syntax { category: category?, agreement: agreement? })
    }

    fn phonology(&mut self, node: Node<'_, 'input>, g: Option<&str>) -> Phonology {
        self.check_attrs(node, g, "phonology", &[]);
        let mut phon = Phonology::default();
        let children = self.elements(node, g, "phonology", &["channel", "handshapeEvent", "anchor", "nonmanual"]);
        for child in children {
            match child.tag_name().name() {
                "channel" => {
                    self.check_attrs(child, g, "channel", &["joint"]);
                    let Some(joint) = self.joint(child, g, "channel", "joint") else { continue };
                    let field = format!("channel[{joint}]");
                    let mut keys = Vec::new();
                    for (i, key) in self.elements(child, g, &field, &["key"]).into_iter().enumerate() {
                        let kf = format!("{field}/key[{i}]");
                        self.check_attrs(key, g, &kf, &["t", "ypr"]);
                        if let (Some(t), Some(q)) = (self.number(key, g, &kf, "t"), self.ypr(key, g, &kf)) {
                            keys.push(RotationKey::new(t, q));
                        }
                    }
                    phon.channels.push(JointChannel { joint, keys });
                }
                "handshapeEvent" => {
                    self.check_attrs(child, g, "handshapeEvent", &["t", "side", "name"]);
                    let t = self.number(child, g, "handshapeEvent", "t");
                    let side = self.keyword::<Side>(child, g, "handshapeEvent", "side");
                    let name = self.required(child, g, "handshapeEvent", "name");
                    if let (Some(time), Some(side), Some(name)) = (t, side, name) {
                        phon.handshape_events.push(HandshapeEvent { time, side, handshape: HandshapeName::new(name) });
                    }
                }
                "anchor" => {
                    self.check_attrs(child, g, "anchor", &["kind", "ref", "point"]);
                    let Some(kind) = self.keyword::<AnchorKind>(child, g, "anchor", "kind") else { continue };
                    let target = match (child.attribute("ref"), child.attribute("point")) {
                        (Some(_), None) => self
                            .keyword::<LocusPlaceholder>(child, g, "anchor", "ref")
                            .map(AnchorTarget::Placeholder),
                        (None, Some(_)) => self.triple(child, g, "anchor", "point").map(AnchorTarget::Point),
                        _ => {
                            self.error(g, "anchor", child, "anchor needs exactly one of ref or point");
                            None
                        }
                    };
                    if let Some(target) = target {
                        phon.anchors.push(Anchor { kind, target });
                    }
                }
                "nonmanual" => {
                    self.check_attrs(child, g, "nonmanual", &["t", "cue", "intensity"]);
                    let t = self.number(child, g, "nonmanual", "t");
                    let cue = self.keyword(child, g, "nonmanual", "cue");
                    let intensity = self.number(child, g, "nonmanual", "intensity");
                    if let (Some(time), Some(cue), Some(intensity)) = (t, cue, intensity) {
                        phon.nonmanual.push(NonmanualEvent { time, cue, intensity });
                    }
                }
                _ => unreachable!(),
            }
        }
        phon
    }

    fn compound(&mut self, node: Node<'_, 'input>, g: Option<&str>) -> Vec<String> {
        self.check_attrs(node, g, "compound", &[]);
        let mut parts = Vec::new();
        for r in self.elements(node, g, "compound", &["ref"]) {
            self.check_attrs(r, g, "compound/ref", &["gloss"]);
            if let Some(target) = self.required(r, g, "compound/ref", "gloss") {
                parts.push(target.to_string());
            }
        }
        parts
    }
}

fn parse_document(text: &str) -> Result<Document<'_>, LexiconError> {
    Document::parse(text).map_err(|e| {
        let pos = e.pos();
        LexiconError::Xml { line: pos.row, column: pos.col, message: e.to_string() }
    })
}

/// Parses and validates a lexicon document. Warnings do not fail the parse.
pub fn parse_lexicon(text: &str) -> Result<Lexicon, LexiconError> {
    let doc = parse_document(text)?;
    let mut r = Reader::new(&doc);
    let root = doc.root_element();
    if root.tag_name().name() != "lexicon" {
        r.error(None, "lexicon", root, format!("root element must be <lexicon>, found <{}>", root.tag_name().name()));
        return Err(LexiconError::Invalid(r.diags));
    }
    r.check_attrs(root, None, "lexicon", &["lang"]);
    let language = r.required(root, None, "lexicon", "lang").unwrap_or_default().to_string();
    let mut handshapes = None;
    let mut alphabet = None;
    let mut signs: Vec<SignEntry> = Vec::new();
    for child in r.elements(root, None, "lexicon", &["handshapes", "alphabet", "sign"]) {
        match child.tag_name().name() {
            "handshapes" if handshapes.is_none() => handshapes = Some(r.handshapes(child)),
            "alphabet" if alphabet.is_none() => alphabet = Some(r.alphabet(child)),
            "sign" => {
                if let Some(sign) = r.sign(child) {
                    if signs.iter().any(|s| s.gloss == sign.gloss) {
                        let g = sign.gloss.clone();
                        r.error(Some(&g), "sign@gloss", child, "duplicate gloss");
                    } else {
                        signs.push(sign);
                    }
                }
            }
            other => r.error(None, other, child, format!("<{other}> given more than once")),
        }
    }
    let mut diags = r.diags;
    let lexicon = Lexicon::new(language, handshapes.unwrap_or_default(), alphabet.unwrap_or_default(), signs);
    diags.extend(validate(&lexicon).into_iter().filter(Diagnostic::is_error));
    if diags.is_empty() {
        Ok(lexicon)
    } else {
        Err(LexiconError::Invalid(diags))
    }
}

/// Parses a single `<sign>` element. Only structure is checked here;
/// lexicon-level rules apply once the sign is placed in a lexicon.
pub fn parse_sign_fragment(text: &str) -> Result<SignEntry, LexiconError> {
    let doc = parse_document(text)?;
    let mut r = Reader::new(&doc);
    let root = doc.root_element();
    if root.tag_name().name() != "sign" {
        r.error(None, "sign", root, format!("expected a <sign> element, found <{}>", root.tag_name().name()));
        return Err(LexiconError::Invalid(r.diags));
    }
    let sign = r.sign(root);
    match sign {
        Some(sign) if r.diags.is_empty() => Ok(sign),
        _ => Err(LexiconError::Invalid(r.diags)),
    }
}

// Angles get nine digits: six leaves up to ~1e-6 rad after three rounded
// angles are composed.
fn ypr_attr(q: Quaternion) -> String {
    let e = quaternion_to_ypr_lenient(q);
    fixed_list(&[e.yaw, e.pitch, e.roll], 9)
}

fn write_sign(out: &mut String, sign: &SignEntry, indent: &str) {
    let i1 = format!("{indent}  ");
    let i2 = format!("{indent}    ");
    let i3 = format!("{indent}      ");
    let _ = writeln!(out, "{indent}<sign gloss=\"{}\">", xml_attr(&sign.gloss));
    let sem = &sign.semantics;
    if !sem.is_empty() {
        let _ = write!(out, "{i1}<semantics");
        if !sem.lemmas.is_empty() {
            let joined = sem.lemmas.join(&LEMMA_SEPARATOR.to_string());
            let _ = write!(out, " lemma=\"{}\"", xml_attr(&joined));
        }
        for (name, value) in [
            ("frame", &sem.frame),
            ("role", &sem.role),
            ("subject", &sem.subject_role),
            ("object", &sem.object_role),
        ] {
            if let Some(v) = value {
                let _ = write!(out, " {name}=\"{}\"", xml_attr(v));
            }
        }
        out.push_str("/>\n");
    }
    if let Some(syn) = sign.syntax {
        let _ = writeln!(out, "{i1}<syntax category=\"{}\" agreement=\"{}\"/>", syn.category, syn.agreement);
    }
    if let Some(phon) = &sign.phonology {
        let _ = writeln!(out, "{i1}<phonology>");
        for ch in &phon.channels {
            let _ = writeln!(out, "{i2}<channel joint=\"{}\">", ch.joint);
            for k in &ch.keys {
                let _ = writeln!(out, "{i3}<key t=\"{}\" ypr=\"{}\"/>", fixed6(k.time), ypr_attr(k.rotation));
            }
            let _ = writeln!(out, "{i2}</channel>");
        }
        for e in &phon.handshape_events {
            let _ = writeln!(
                out,
                "{i2}<handshapeEvent t=\"{}\" side=\"{}\" name=\"{}\"/>",
                fixed6(e.time),
                e.side.as_str(),
                xml_attr(e.handshape.as_str())
            );
        }
        for a in &phon.anchors {
            match a.target {
                AnchorTarget::Placeholder(p) => {
                    let _ = writeln!(out, "{i2}<anchor kind=\"{}\" ref=\"{}\"/>", a.kind, p);
                }
                AnchorTarget::Point(p) => {
                    let _ = writeln!(out, "{i2}<anchor kind=\"{}\" point=\"{}\"/>", a.kind, fixed_list(&p, 6));
                }
            }
        }
        for n in &phon.nonmanual {
            let _ = writeln!(
                out,
                "{i2}<nonmanual t=\"{}\" cue=\"{}\" intensity=\"{}\"/>",
                fixed6(n.time),
                n.cue,
                fixed6(n.intensity)
            );
        }
        let _ = writeln!(out, "{i1}</phonology>");
    }
    if let Some(parts) = &sign.compound {
        let _ = writeln!(out, "{i1}<compound>");
        for p in parts {
            let _ = writeln!(out, "{i2}<ref gloss=\"{}\"/>", xml_attr(p));
        }
        let _ = writeln!(out, "{i1}</compound>");
    }
    let _ = writeln!(out, "{indent}</sign>");
}

/// The `<sign>` element alone, as served for editing.
pub fn serialize_sign(sign: &SignEntry) -> String {
    let mut out = String::new();
    write_sign(&mut out, sign, "");
    out
}

pub fn serialize_lexicon(lex: &Lexicon) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<lexicon lang=\"{}\">", xml_attr(lex.language()));
    if lex.handshapes().is_empty() {
        out.push_str("  <handshapes/>\n");
    } else {
        out.push_str("  <handshapes>\n");
        for (name, shape) in lex.handshapes().iter() {
            let _ = writeln!(out, "    <handshape name=\"{}\">", xml_attr(name.as_str()));
            for (slot, joint) in JointName::finger_joints(Side::Right).into_iter().enumerate() {
                let _ = writeln!(out, "      <joint name=\"{joint}\" ypr=\"{}\"/>", ypr_attr(shape.rotations[slot]));
            }
            out.push_str("    </handshape>\n");
        }
        out.push_str("  </handshapes>\n");
    }
    if lex.alphabet().is_empty() {
        out.push_str("  <alphabet/>\n");
    } else {
        out.push_str("  <alphabet>\n");
        for (c, gloss) in lex.alphabet() {
            let _ = writeln!(out, "    <letter char=\"{}\" gloss=\"{}\"/>", xml_attr(&c.to_string()), xml_attr(gloss));
        }
        out.push_str("  </alphabet>\n");
    }
    for sign in lex.signs() {
        write_sign(&mut out, sign, "  ");
    }
    out.push_str("</lexicon>\n");
    out
}
