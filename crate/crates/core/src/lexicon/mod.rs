//! The sign lexicon: three-level sign entries, the handshape inventory and
//! the fingerspelling alphabet, with XML interchange and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::{angular_distance, RotationKey, Vec3};
use crate::skeleton::{HandshapeInventory, HandshapeName, JointName, Side};

mod validate;
mod xml;

pub use validate::validate;
pub use xml::{parse_lexicon, parse_sign_fragment, serialize_lexicon, serialize_sign};

/// The 28 base letters of the Arabic alphabet, in alphabetical order.
pub const ARABIC_BASE_LETTERS: [char; 28] = [
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع',
    'غ', 'ف', 'ق', 'ك', 'ل', 'م', 'ن', 'ه', 'و', 'ي',
];

/// Maximum nesting of compound signs.
pub const MAX_COMPOUND_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexiconError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: u32, column: u32, message: String },
    #[error("lexicon is invalid:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub gloss: Option<String>,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(gloss: Option<&str>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            gloss: gloss.map(str::to_string),
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn warning(gloss: Option<&str>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, ..Self::error(gloss, field, message) }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.gloss {
            Some(g) => write!(f, "{sev}[{g}] {}: {}", self.field, self.message),
            None => write!(f, "{sev} {}: {}", self.field, self.message),
        }
    }
}

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident = $text:literal),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant,)*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)*
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)*
                    other => Err(format!(
                        "{other:?} is not one of {}",
                        [$($text),*].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Category {
    Noun = "noun",
    Verb = "verb",
    Adjective = "adjective",
    Adverb = "adverb",
    Pronoun = "pronoun",
    Classifier = "classifier",
});

keyword_enum!(Agreement {
    None = "none",
    Subject = "subject",
    SubjectObject = "subject-object",
});

keyword_enum!(
    /// Non-manual signal kinds.
    NonmanualCue {
        EyeGazeLeft = "eye_gaze_left",
        EyeGazeRight = "eye_gaze_right",
        HeadTilt = "head_tilt",
        BrowRaise = "brow_raise",
        BrowFurrow = "brow_furrow",
        MouthOpen = "mouth_open",
    }
);

keyword_enum!(AnchorKind {
    Start = "start",
    End = "end",
});

keyword_enum!(
    /// Symbolic locus resolved at planning time from verb arguments.
    LocusPlaceholder {
        Subject = "SUBJ_LOCUS",
        Object = "OBJ_LOCUS",
    }
);

/// Semantic level: what the sign means and which frame it belongs to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Semantics {
    pub lemmas: Vec<String>,
    pub frame: Option<String>,
    /// Frame element this sign realizes.
    pub role: Option<String>,
    /// For agreeing verbs: the frame elements acting as subject and object.
    pub subject_role: Option<String>,
    pub object_role: Option<String>,
}

impl Semantics {
    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
            && self.frame.is_none()
            && self.role.is_none()
            && self.subject_role.is_none()
            && self.object_role.is_none()
    }
}

/// Syntactic level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syntax {
    pub category: Category,
    pub agreement: Agreement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointChannel {
    pub joint: JointName,
    pub keys: Vec<RotationKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshapeEvent {
    pub time: f64,
    pub side: Side,
    pub handshape: HandshapeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnchorTarget {
    Point(Vec3),
    Placeholder(LocusPlaceholder),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub kind: AnchorKind,
    pub target: AnchorTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonmanualEvent {
    pub time: f64,
    pub cue: NonmanualCue,
    pub intensity: f64,
}

/// Phonological level: timed joint channels, handshape changes, location
/// anchors and non-manual signals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Phonology {
    pub channels: Vec<JointChannel>,
    pub handshape_events: Vec<HandshapeEvent>,
    pub anchors: Vec<Anchor>,
    pub nonmanual: Vec<NonmanualEvent>,
}

impl Phonology {
    pub fn anchor(&self, kind: AnchorKind) -> Option<AnchorTarget> {
        self.anchors.iter().find(|a| a.kind == kind).map(|a| a.target)
    }

    pub fn placeholders(&self) -> impl Iterator<Item = (AnchorKind, LocusPlaceholder)> + '_ {
        self.anchors.iter().filter_map(|a| match a.target {
            AnchorTarget::Placeholder(p) => Some((a.kind, p)),
            AnchorTarget::Point(_) => None,
        })
    }

    /// Latest authored time across channels and events.
    pub fn motion_duration(&self) -> f64 {
        let keys = self.channels.iter().flat_map(|c| c.keys.iter().map(|k| k.time));
        let hs = self.handshape_events.iter().map(|e| e.time);
        let nm = self.nonmanual.iter().map(|e| e.time);
        keys.chain(hs).chain(nm).fold(0.0, f64::max)
    }
}

/// One lexicon sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignEntry {
    pub gloss: String,
    pub semantics: Semantics,
    pub syntax: Option<Syntax>,
    pub phonology: Option<Phonology>,
    /// Component glosses of a complex sign, in signing order.
    pub compound: Option<Vec<String>>,
}

impl SignEntry {
    pub fn simple(gloss: impl Into<String>, phonology: Phonology) -> Self {
        Self {
            gloss: gloss.into(),
            semantics: Semantics::default(),
            syntax: None,
            phonology: Some(phonology),
            compound: None,
        }
    }

    pub fn compound(gloss: impl Into<String>, parts: Vec<String>) -> Self {
        Self {
            gloss: gloss.into(),
            semantics: Semantics::default(),
            syntax: None,
            phonology: None,
            compound: Some(parts),
        }
    }

    pub fn with_semantics(mut self, semantics: Semantics) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn with_syntax(mut self, category: Category, agreement: Agreement) -> Self {
        self.syntax = Some(Syntax { category, agreement });
        self
    }

    pub fn category(&self) -> Option<Category> {
        self.syntax.map(|s| s.category)
    }

    pub fn agreement(&self) -> Agreement {
        self.syntax.map_or(Agreement::None, |s| s.agreement)
    }

    pub fn is_compound(&self) -> bool {
        self.compound.as_ref().is_some_and(|c| !c.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupKey<'a> {
    Gloss(&'a str),
    Lemma(&'a str),
    Frame(&'a str),
}

/// An immutable, indexed sign lexicon. Edits produce a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    language: String,
    signs: BTreeMap<String, SignEntry>,
    handshapes: HandshapeInventory,
    alphabet: BTreeMap<char, String>,
    lemma_index: BTreeMap<String, Vec<String>>,
    frame_index: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    /// Builds the lexicon and its indexes. Later signs replace earlier ones
    /// with the same gloss.
    pub fn new(
        language: impl Into<String>,
        handshapes: HandshapeInventory,
        alphabet: BTreeMap<char, String>,
        signs: impl IntoIterator<Item = SignEntry>,
    ) -> Self {
        let signs: BTreeMap<_, _> = signs.into_iter().map(|s| (s.gloss.clone(), s)).collect();
        let mut lex = Self {
            language: language.into(),
            signs,
            handshapes,
            alphabet,
            lemma_index: BTreeMap::new(),
            frame_index: BTreeMap::new(),
        };
        lex.reindex();
        lex
    }

    pub fn empty(language: impl Into<String>) -> Self {
        Self::new(language, HandshapeInventory::new(), BTreeMap::new(), Vec::new())
    }

    fn reindex(&mut self) {
        self.lemma_index.clear();
        self.frame_index.clear();
        // Signs iterate in gloss order, so index lists come out sorted.
        for sign in self.signs.values() {
            for lemma in &sign.semantics.lemmas {
                let list = self.lemma_index.entry(lemma.clone()).or_default();
                if !list.contains(&sign.gloss) {
                    list.push(sign.gloss.clone());
                }
            }
            if let Some(frame) = &sign.semantics.frame {
                self.frame_index.entry(frame.clone()).or_default().push(sign.gloss.clone());
            }
        }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn sign(&self, gloss: &str) -> Option<&SignEntry> {
        self.signs.get(gloss)
    }

    /// Signs in gloss order.
    pub fn signs(&self) -> impl Iterator<Item = &SignEntry> {
        self.signs.values()
    }

    pub fn handshapes(&self) -> &HandshapeInventory {
        &self.handshapes
    }

    pub fn alphabet(&self) -> &BTreeMap<char, String> {
        &self.alphabet
    }

    pub fn lemma_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.lemma_index
    }

    pub fn frame_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.frame_index
    }

    /// Exact-match lookup. Absence yields an empty list.
    pub fn lookup(&self, key: LookupKey<'_>) -> Vec<&SignEntry> {
        let glosses: &[String] = match key {
            LookupKey::Gloss(g) => return self.signs.get(g).into_iter().collect(),
            LookupKey::Lemma(l) => self.lemma_index.get(l).map_or(&[], Vec::as_slice),
            LookupKey::Frame(f) => self.frame_index.get(f).map_or(&[], Vec::as_slice),
        };
        glosses.iter().filter_map(|g| self.signs.get(g)).collect()
    }

    /// Copy with `sign` inserted or replaced.
    pub fn with_sign(&self, sign: SignEntry) -> Lexicon {
        let mut next = self.clone();
        next.signs.insert(sign.gloss.clone(), sign);
        next.reindex();
        next
    }

    /// Copy without `gloss`; `None` when the gloss is absent.
    pub fn without_sign(&self, gloss: &str) -> Option<Lexicon> {
        let mut next = self.clone();
        next.signs.remove(gloss)?;
        next.reindex();
        Some(next)
    }

    /// First structural difference from `other`, comparing rotations by
    /// angular distance and scalars by absolute difference.
    pub fn structural_diff(&self, other: &Lexicon, angle_tol: f64, scalar_tol: f64) -> Option<String> {
        if self.language != other.language {
            return Some(format!("language {:?} vs {:?}", self.language, other.language));
        }
        if self.alphabet != other.alphabet {
            return Some("alphabet differs".into());
        }
        let a: Vec<_> = self.handshapes.iter().collect();
        let b: Vec<_> = other.handshapes.iter().collect();
        if a.len() != b.len() {
            return Some(format!("{} vs {} handshapes", a.len(), b.len()));
        }
        for ((na, ha), (nb, hb)) in a.iter().zip(&b) {
            if na != nb {
                return Some(format!("handshape {na} vs {nb}"));
            }
            for (qa, qb) in ha.rotations.iter().zip(&hb.rotations) {
                if angular_distance(*qa, *qb) > angle_tol {
                    return Some(format!("handshape {na} rotation differs"));
                }
            }
        }
        if self.signs.len() != other.signs.len() {
            return Some(format!("{} vs {} signs", self.signs.len(), other.signs.len()));
        }
        for (sa, sb) in self.signs.values().zip(other.signs.values()) {
            if let Some(d) = sign_diff(sa, sb, angle_tol, scalar_tol) {
                return Some(format!("sign {}: {d}", sa.gloss));
            }
        }
        if self.lemma_index != other.lemma_index || self.frame_index != other.frame_index {
            return Some("indexes differ".into());
        }
        None
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn sign_diff(a: &SignEntry, b: &SignEntry, angle_tol: f64, tol: f64) -> Option<String> {
    if a.gloss != b.gloss {
        return Some(format!("gloss {:?} vs {:?}", a.gloss, b.gloss));
    }
    if a.semantics != b.semantics {
        return Some("semantics differ".into());
    }
    if a.syntax != b.syntax {
        return Some("syntax differs".into());
    }
    if a.compound != b.compound {
        return Some("compound differs".into());
    }
    match (&a.phonology, &b.phonology) {
        (None, None) => None,
        (Some(pa), Some(pb)) => phonology_diff(pa, pb, angle_tol, tol),
        _ => Some("phonology presence differs".into()),
    }
}

fn phonology_diff(a: &Phonology, b: &Phonology, angle_tol: f64, tol: f64) -> Option<String> {
    if a.channels.len() != b.channels.len() {
        return Some("channel count differs".into());
    }
    for (ca, cb) in a.channels.iter().zip(&b.channels) {
        if ca.joint != cb.joint || ca.keys.len() != cb.keys.len() {
            return Some(format!("channel {} differs", ca.joint));
        }
        for (ka, kb) in ca.keys.iter().zip(&cb.keys) {
            if !close(ka.time, kb.time, tol) {
                return Some(format!("channel {} key time {} vs {}", ca.joint, ka.time, kb.time));
            }
            let d = angular_distance(ka.rotation, kb.rotation);
            if d > angle_tol {
                return Some(format!("channel {} key at {} off by {d:e} rad", ca.joint, ka.time));
            }
        }
    }
    let hs_eq = a.handshape_events.len() == b.handshape_events.len()
        && a.handshape_events.iter().zip(&b.handshape_events).all(|(x, y)| {
            close(x.time, y.time, tol) && x.side == y.side && x.handshape == y.handshape
        });
    if !hs_eq {
        return Some("handshape events differ".into());
    }
    let anchors_eq = a.anchors.len() == b.anchors.len()
        && a.anchors.iter().zip(&b.anchors).all(|(x, y)| {
            x.kind == y.kind
                && match (x.target, y.target) {
                    (AnchorTarget::Point(p), AnchorTarget::Point(q)) => {
                        (0..3).all(|i| close(p[i], q[i], tol))
                    }
                    (s, t) => s == t,
                }
        });
    if !anchors_eq {
        return Some("anchors differ".into());
    }
    let nm_eq = a.nonmanual.len() == b.nonmanual.len()
        && a.nonmanual.iter().zip(&b.nonmanual).all(|(x, y)| {
            close(x.time, y.time, tol) && x.cue == y.cue && close(x.intensity, y.intensity, tol)
        });
    if !nm_eq {
        return Some("non-manual events differ".into());
    }
    None
}
