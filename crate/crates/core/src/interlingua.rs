//! Frame-based sentence documents, signing-space loci, sentence planning and
//! the end-to-end translation pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::compiler::{
    compile_entry, concatenate, join, merge_simultaneous, retime, AnimationDocument,
    CompileError, TransitionPolicy,
};
use crate::lexicon::{Agreement, AnchorKind, Category, Lexicon, LocusPlaceholder, LookupKey, SignEntry};
use crate::rotation::{ypr_to_quaternion, EulerYpr, Quaternion, RotationKey, Vec3};
use crate::skeleton::JointName;

/// Hold time of each fingerspelled letter.
pub const LETTER_HOLD: f64 = 0.5;
/// Height and radius of the arc carrying the loci.
pub const LOCUS_HEIGHT: f64 = 1.2;
pub const LOCUS_RADIUS: f64 = 0.35;
/// Slot azimuths in allocation order, degrees from +Z toward +X.
pub const LOCUS_AZIMUTHS_DEG: [f64; 4] = [30.0, -30.0, 60.0, -60.0];

pub const NEG_GLOSS: &str = "NEG";
pub const PAST_GLOSS: &str = "PAST";
pub const FUTURE_GLOSS: &str = "FUTURE";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterlinguaError {
    #[error("malformed interlingua JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("signing space is full: {needed} new referents but only {free} free loci")]
    Capacity { needed: usize, free: usize },
    #[error("planning failed: {0}")]
    Planning(String),
    #[error("cannot fingerspell {word:?}: letter {letter:?} is not in the alphabet")]
    Unspellable { word: String, letter: char },
    #[error("{0} is not an agreeing verb")]
    NotAgreeing(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tense {
    Past,
    Present,
    Future,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    Affirmative,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Referent {
    pub lemma: String,
    #[serde(rename = "id")]
    pub discourse_id: String,
}

/// Frame elements in document order. Duplicates are kept here so that
/// validation can name them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Elements(pub Vec<(String, Referent)>);

impl Serialize for Elements {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(k, v)| (k, v)))
    }
}

impl<'de> Deserialize<'de> for Elements {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Elements;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from role names to referents")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Elements, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Referent>()? {
                    out.push((k, v));
                }
                Ok(Elements(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterlinguaDocument {
    pub frame: String,
    #[serde(default)]
    pub elements: Elements,
    #[serde(default)]
    pub tense: Tense,
    #[serde(default)]
    pub polarity: Polarity,
}

impl InterlinguaDocument {
    pub fn new(frame: impl Into<String>) -> Self {
        Self {
            frame: frame.into(),
            elements: Elements::default(),
            tense: Tense::None,
            polarity: Polarity::Affirmative,
        }
    }

    pub fn with_role(mut self, role: &str, lemma: &str, id: &str) -> Self {
        self.elements.0.push((role.into(), Referent { lemma: lemma.into(), discourse_id: id.into() }));
        self
    }

    pub fn referent(&self, role: &str) -> Option<&Referent> {
        self.elements.0.iter().find(|(r, _)| r == role).map(|(_, v)| v)
    }

    /// Roles sorted by name.
    pub fn roles_sorted(&self) -> Vec<(&str, &Referent)> {
        let mut v: Vec<_> = self.elements.0.iter().map(|(r, x)| (r.as_str(), x)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn validate(&self, prefix: &str) -> Result<(), InterlinguaError> {
        let invalid = |path: String, message: &str| InterlinguaError::Invalid { path, message: message.into() };
        if self.frame.trim().is_empty() {
            return Err(invalid(format!("{prefix}frame"), "frame is empty"));
        }
        let mut seen = BTreeSet::new();
        for (role, r) in &self.elements.0 {
            let path = format!("{prefix}elements.{role}");
            if role.trim().is_empty() {
                return Err(invalid(path, "role name is empty"));
            }
            if !seen.insert(role.as_str()) {
                return Err(invalid(path, "duplicate role name"));
            }
            if r.lemma.trim().is_empty() {
                return Err(invalid(format!("{path}.lemma"), "lemma is empty"));
            }
            if r.discourse_id.trim().is_empty() {
                return Err(invalid(format!("{path}.id"), "discourse id is empty"));
            }
        }
        Ok(())
    }
}

fn json_error(e: serde_json::Error) -> InterlinguaError {
    InterlinguaError::Json { line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_interlingua(text: &str) -> Result<InterlinguaDocument, InterlinguaError> {
    let doc: InterlinguaDocument = serde_json::from_str(text).map_err(json_error)?;
    doc.validate("")?;
    Ok(doc)
}

/// A single sentence object or an array of them.
pub fn parse_sentences(text: &str) -> Result<Vec<InterlinguaDocument>, InterlinguaError> {
    let is_array = text.trim_start().starts_with('[');
    let docs = if is_array {
        serde_json::from_str::<Vec<InterlinguaDocument>>(text).map_err(json_error)?
    } else {
        vec![serde_json::from_str::<InterlinguaDocument>(text).map_err(json_error)?]
    };
    for (i, d) in docs.iter().enumerate() {
        let prefix = if is_array { format!("[{i}].") } else { String::new() };
        d.validate(&prefix)?;
    }
    Ok(docs)
}

/// Discourse referent loci in allocation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LociMap {
    entries: Vec<(String, Vec3)>,
}

impl LociMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &str) -> Option<Vec3> {
        self.entries.iter().find(|(k, _)| k == id).map(|(_, p)| *p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Referent ids in allocation order.
    pub fn order(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Vec3)> {
        self.entries.iter().map(|(k, p)| (k.as_str(), *p))
    }

    pub fn insert(&mut self, id: impl Into<String>, point: Vec3) {
        let id = id.into();
        match self.entries.iter_mut().find(|(k, _)| *k == id) {
            Some(e) => e.1 = point,
            None => self.entries.push((id, point)),
        }
    }
}

impl Serialize for LociMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.entries.iter().map(|(k, v)| (k, v)))
    }
}

impl<'de> Deserialize<'de> for LociMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = LociMap;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from discourse ids to points")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<LociMap, A::Error> {
                let mut out = LociMap::new();
                while let Some((k, v)) = map.next_entry::<String, Vec3>()? {
                    if out.get(&k).is_some() {
                        return Err(de::Error::custom(format!("duplicate referent {k:?}")));
                    }
                    out.insert(k, v);
                }
                Ok(out)
            }
        }
        d.deserialize_map(V)
    }
}

/// Locus of slot `k` (0-based) on the chest-height arc.
pub fn slot_point(k: usize) -> Vec3 {
    let th = LOCUS_AZIMUTHS_DEG[k].to_radians();
    [LOCUS_RADIUS * th.sin(), LOCUS_HEIGHT, LOCUS_RADIUS * th.cos()]
}

/// Gives every new referent the next free slot, visiting roles in name
/// order. Known referents keep their loci.
pub fn allocate_loci(doc: &InterlinguaDocument, existing: &LociMap) -> Result<LociMap, InterlinguaError> {
    let mut out = existing.clone();
    let mut fresh: Vec<&str> = Vec::new();
    for (_, r) in doc.roles_sorted() {
        let id = r.discourse_id.as_str();
        if out.get(id).is_none() && !fresh.contains(&id) {
            fresh.push(id);
        }
    }
    let free: Vec<Vec3> = (0..LOCUS_AZIMUTHS_DEG.len())
        .map(slot_point)
        .filter(|p| !existing.iter().any(|(_, q)| q == *p))
        .collect();
    if fresh.len() > free.len() {
        return Err(InterlinguaError::Capacity { needed: fresh.len(), free: free.len() });
    }
    for (id, p) in fresh.into_iter().zip(free) {
        out.insert(id, p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanItem {
    Sign {
        gloss: String,
        start: Option<Vec3>,
        end: Option<Vec3>,
    },
    Fingerspelling {
        word: String,
        letters: Vec<String>,
    },
}

impl PlanItem {
    pub fn sign(gloss: impl Into<String>) -> Self {
        PlanItem::Sign { gloss: gloss.into(), start: None, end: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SentencePlan {
    pub items: Vec<PlanItem>,
    /// Negation without a NEG sign: shake the head over the whole sentence.
    pub head_shake: bool,
    pub warnings: Vec<String>,
}

// Letters folded to their base form before alphabet lookup.
fn fold_letter(c: char) -> Option<char> {
    match c {
        '\u{064B}'..='\u{0652}' | '\u{0670}' | '\u{0640}' => None,
        'أ' | 'إ' | 'آ' | 'ٱ' => Some('ا'),
        'ة' => Some('ه'),
        'ى' | 'ئ' => Some('ي'),
        'ؤ' => Some('و'),
        c if c.is_whitespace() => None,
        c => Some(c),
    }
}

/// Strips diacritics and tatweel and folds letter variants to base letters.
pub fn normalize_word(word: &str) -> String {
    word.chars().filter_map(fold_letter).collect()
}

pub fn fingerspell(word: &str, lex: &Lexicon) -> Result<PlanItem, InterlinguaError> {
    let letters_text = normalize_word(word);
    if letters_text.is_empty() {
        return Err(InterlinguaError::InvalidArgument(format!("nothing to fingerspell in {word:?}")));
    }
    let mut letters = Vec::new();
    for c in letters_text.chars() {
        let gloss = lex
            .alphabet()
            .get(&c)
            .filter(|g| lex.sign(g).is_some())
            .ok_or_else(|| InterlinguaError::Unspellable { word: word.to_string(), letter: c })?;
        letters.push(gloss.clone());
    }
    Ok(PlanItem::Fingerspelling { word: word.to_string(), letters })
}

/// Points the verb's placeholder anchors at the argument loci.
pub fn apply_agreement(verb: &SignEntry, subj: Vec3, obj: Vec3) -> Result<PlanItem, InterlinguaError> {
    if verb.agreement() == Agreement::None {
        return Err(InterlinguaError::NotAgreeing(verb.gloss.clone()));
    }
    let phon = verb.phonology.as_ref();
    let resolve = |kind: AnchorKind| {
        phon.and_then(|p| p.placeholders().find(|(k, _)| *k == kind)).map(|(_, ph)| match ph {
            LocusPlaceholder::Subject => subj,
            LocusPlaceholder::Object => obj,
        })
    };
    let (start, end) = (resolve(AnchorKind::Start), resolve(AnchorKind::End));
    if start.is_none() && end.is_none() {
        return Err(InterlinguaError::Planning(format!("{} has no locus placeholders", verb.gloss)));
    }
    Ok(PlanItem::Sign { gloss: verb.gloss.clone(), start, end })
}

fn referent_sign<'a>(lex: &'a Lexicon, lemma: &str) -> Option<&'a SignEntry> {
    let candidates = lex.lookup(LookupKey::Lemma(lemma));
    candidates
        .iter()
        .find(|s| s.category() != Some(Category::Verb))
        .or(candidates.first())
        .copied()
}

fn verb_sign<'a>(lex: &'a Lexicon, frame: &str) -> Option<&'a SignEntry> {
    lex.lookup(LookupKey::Frame(frame)).into_iter().find(|s| s.category() == Some(Category::Verb))
}

/// Referent signs first (by role name), then the frame's verb with its
/// agreement loci, with tense and negation handled lexically when the
/// lexicon allows it.
pub fn plan_sentence(doc: &InterlinguaDocument, lex: &Lexicon, loci: &LociMap) -> Result<SentencePlan, InterlinguaError> {
    let mut plan = SentencePlan::default();
    let tense_gloss = match doc.tense {
        Tense::Past => Some(PAST_GLOSS),
        Tense::Future => Some(FUTURE_GLOSS),
        Tense::Present | Tense::None => None,
    };
    if let Some(g) = tense_gloss {
        if lex.sign(g).is_some() {
            plan.items.push(PlanItem::sign(g));
        } else {
            plan.warnings.push(format!("no {g} sign in the lexicon; tense marker dropped"));
        }
    }

    for (role, r) in doc.roles_sorted() {
        match referent_sign(lex, &r.lemma) {
            Some(sign) => plan.items.push(PlanItem::sign(&sign.gloss)),
            None => plan.items.push(fingerspell(&r.lemma, lex).map_err(|e| {
                InterlinguaError::Planning(format!("role {role}: lemma {:?} has no sign and {e}", r.lemma))
            })?),
        }
    }

    match verb_sign(lex, &doc.frame) {
        None => plan.warnings.push(format!("frame {:?} has no verb sign", doc.frame)),
        Some(verb) if verb.agreement() == Agreement::None => plan.items.push(PlanItem::sign(&verb.gloss)),
        Some(verb) => {
            let (subj_role, obj_role) = argument_roles(verb, doc);
            let locus = |role: Option<&str>, which: &str| {
                role.and_then(|r| doc.referent(r))
                    .and_then(|r| loci.get(&r.discourse_id))
                    .ok_or_else(|| {
                        InterlinguaError::Planning(format!(
                            "verb {} needs a {which} locus but frame element {:?} is not in the sentence",
                            verb.gloss,
                            role.unwrap_or("?")
                        ))
                    })
            };
            let subj = locus(subj_role, "subject")?;
            let obj = if verb.agreement() == Agreement::SubjectObject {
                locus(obj_role, "object")?
            } else {
                subj
            };
            plan.items.push(apply_agreement(verb, subj, obj)?);
        }
    }

    if doc.polarity == Polarity::Negative {
        if lex.sign(NEG_GLOSS).is_some() {
            plan.items.push(PlanItem::sign(NEG_GLOSS));
        } else {
            plan.head_shake = true;
        }
    }
    if plan.items.is_empty() {
        return Err(InterlinguaError::Planning(format!(
            "frame {:?} has no verb sign and no referent to sign or fingerspell",
            doc.frame
        )));
    }
    Ok(plan)
}

// Subject and object frame elements of an agreeing verb: declared on the
// sign, else the first and second roles in document order.
fn argument_roles<'a>(verb: &'a SignEntry, doc: &'a InterlinguaDocument) -> (Option<&'a str>, Option<&'a str>) {
    let order: Vec<&str> = doc.elements.0.iter().map(|(r, _)| r.as_str()).collect();
    let subj = verb.semantics.subject_role.as_deref().or(order.first().copied());
    let obj = verb
        .semantics
        .object_role
        .as_deref()
        .or_else(|| order.iter().copied().find(|r| Some(*r) != subj));
    (subj, obj)
}

fn unknown(gloss: &str) -> CompileError {
    CompileError::UnknownGloss(gloss.to_string())
}

/// Compiles a plan item to a timeline without a rest tail.
pub fn compile_item(item: &PlanItem, lex: &Lexicon, policy: &TransitionPolicy) -> Result<AnimationDocument, CompileError> {
    match item {
        PlanItem::Sign { gloss, start, end } => {
            let sign = lex.sign(gloss).ok_or_else(|| unknown(gloss))?;
            compile_entry(sign, lex, *start, *end, policy)
        }
        PlanItem::Fingerspelling { letters, .. } => {
            let mut docs = Vec::with_capacity(letters.len());
            for g in letters {
                let sign = lex.sign(g).ok_or_else(|| unknown(g))?;
                let doc = compile_entry(sign, lex, None, None, policy)?;
                docs.push(retime(&doc, LETTER_HOLD / doc.signing_end)?);
            }
            join(&docs, policy)
        }
    }
}

/// Side-to-side head rotation over `[0, until]`.
pub fn head_shake(until: f64) -> AnimationDocument {
    const AMPLITUDE: f64 = 0.35;
    const HALF_PERIOD: f64 = 0.2;
    let turn = |a: f64| -> Quaternion { ypr_to_quaternion(EulerYpr::new(a, 0.0, 0.0)).expect("finite") };
    let mut keys = vec![RotationKey::new(0.0, Quaternion::IDENTITY)];
    let swings = ((until / HALF_PERIOD).floor() as usize).saturating_sub(1).max(1);
    let step = until / (swings + 1) as f64;
    for i in 1..=swings {
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        keys.push(RotationKey::new(step * i as f64, turn(sign * AMPLITUDE)));
    }
    keys.push(RotationKey::new(until, Quaternion::IDENTITY));
    AnimationDocument {
        duration: until,
        signing_end: until,
        tracks: BTreeMap::from([(JointName::Skullbase, keys)]),
        ..AnimationDocument::default()
    }
}

/// Compiles a plan into a finished sentence timeline with the rest tail.
pub fn compile_plan(plan: &SentencePlan, lex: &Lexicon, policy: &TransitionPolicy) -> Result<AnimationDocument, CompileError> {
    let docs = plan
        .items
        .iter()
        .map(|item| compile_item(item, lex, policy))
        .collect::<Result<Vec<_>, _>>()?;
    let doc = concatenate(&docs, policy)?;
    if plan.head_shake {
        return merge_simultaneous(&doc, &head_shake(doc.signing_end));
    }
    Ok(doc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Loci,
    Planning,
    Compilation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Loci => "loci",
            Stage::Planning => "planning",
            Stage::Compilation => "compilation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    #[error("{stage} error: {source}")]
    Interlingua { stage: Stage, source: InterlinguaError },
    #[error("compilation error: {0}")]
    Compile(#[from] CompileError),
}

impl TranslateError {
    pub fn stage(&self) -> Stage {
        match self {
            TranslateError::Interlingua { stage, .. } => *stage,
            TranslateError::Compile(_) => Stage::Compilation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub document: AnimationDocument,
    pub loci: LociMap,
    pub plans: Vec<SentencePlan>,
}

impl Translation {
    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.plans.iter().flat_map(|p| p.warnings.iter().map(String::as_str))
    }
}

pub fn translate(
    doc: &InterlinguaDocument,
    lex: &Lexicon,
    existing: &LociMap,
    policy: &TransitionPolicy,
) -> Result<Translation, TranslateError> {
    translate_all(std::slice::from_ref(doc), lex, existing, policy)
}

/// Translates sentences in order, threading one locus map through them, and
/// joins the results into one timeline.
pub fn translate_all(
    docs: &[InterlinguaDocument],
    lex: &Lexicon,
    existing: &LociMap,
    policy: &TransitionPolicy,
) -> Result<Translation, TranslateError> {
    let tag = |stage| move |source| TranslateError::Interlingua { stage, source };
    if docs.is_empty() {
        return Err(tag(Stage::Planning)(InterlinguaError::InvalidArgument("no sentences".into())));
    }
    let mut loci = existing.clone();
    let mut plans = Vec::new();
    let mut sentences = Vec::new();
    for doc in docs {
        doc.validate("").map_err(tag(Stage::Planning))?;
        loci = allocate_loci(doc, &loci).map_err(tag(Stage::Loci))?;
        let plan = plan_sentence(doc, lex, &loci).map_err(tag(Stage::Planning))?;
        sentences.push(compile_plan(&plan, lex, policy)?);
        plans.push(plan);
    }
    let document = if sentences.len() == 1 {
        sentences.pop().expect("one sentence")
    } else {
        concatenate(&sentences, policy)?
    };
    Ok(Translation { document, loci, plans })
}

/// Fingerspells one word into a finished timeline.
pub fn fingerspell_document(word: &str, lex: &Lexicon, policy: &TransitionPolicy) -> Result<AnimationDocument, TranslateError> {
    let item = fingerspell(word, lex).map_err(|source| TranslateError::Interlingua { stage: Stage::Planning, source })?;
    Ok(concatenate(&[compile_item(&item, lex, policy)?], policy)?)
}

/// Compiles a list of glosses in order, the plain sequence used by the
/// `compile` command and endpoint.
pub fn compile_glosses(glosses: &[String], lex: &Lexicon, policy: &TransitionPolicy) -> Result<AnimationDocument, CompileError> {
    if glosses.is_empty() {
        return Err(CompileError::InvalidArgument("no glosses given".into()));
    }
    let docs = glosses
        .iter()
        .map(|g| {
            let sign = lex.sign(g).ok_or_else(|| unknown(g))?;
            if sign.phonology.as_ref().is_some_and(|p| p.placeholders().next().is_some()) {
                // Agreeing verbs out of sentence context take the first two slots.
                let (start, end) = (slot_point(0), slot_point(1));
                let item = apply_agreement(sign, start, end).map_err(|e| CompileError::Sign {
                    gloss: g.clone(),
                    message: e.to_string(),
                })?;
                return compile_item(&item, lex, policy);
            }
            compile_entry(sign, lex, None, None, policy)
        })
        .collect::<Result<Vec<_>, _>>()?;
    concatenate(&docs, policy)
}
