//! Lowers lexicon signs to keyframe timelines and joins them into sentences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{AnchorKind, AnchorTarget, Lexicon, LocusPlaceholder, NonmanualEvent, SignEntry};
use crate::rotation::{sample_track, RotationError, RotationKey, Vec3};
use crate::skeleton::{
    apply_handshape, neutral_posture, posture_distance, JointName, Posture, Side, SkeletonError,
};

mod aim;

pub use aim::{
    aim_cell, arm_aim, polar, AimCell, AIM_ORIGIN, AZIMUTH_CELLS, AZIMUTH_RANGE, ELEVATION_CELLS,
    ELEVATION_RANGE, RADIUS_CELLS, RADIUS_RANGE,
};

/// Hold given to a sign whose keys all sit at t=0.
pub const STATIC_HOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown gloss {0:?}")]
    UnknownGloss(String),
    #[error("sign {gloss}: missing locus for {placeholder}")]
    MissingLocus { gloss: String, placeholder: LocusPlaceholder },
    #[error("compound expansion {}: {message}", chain.join(" -> "))]
    Compound { chain: Vec<String>, message: String },
    #[error("joint {joint} keyed by both documents over [{start}, {end}]")]
    Conflict { joint: JointName, start: f64, end: f64 },
    #[error("sign {gloss}: {message}")]
    Sign { gloss: String, message: String },
    #[error(transparent)]
    Rotation(#[from] RotationError),
}

/// Timing rule for the gap between consecutive signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionPolicy {
    pub min_duration: f64,
    pub max_duration: f64,
    /// Radians per second.
    pub reference_speed: f64,
}

impl Default for TransitionPolicy {
    fn default() -> Self {
        Self { min_duration: 0.15, max_duration: 0.8, reference_speed: 6.0 }
    }
}

impl TransitionPolicy {
    pub fn new(min_duration: f64, max_duration: f64, reference_speed: f64) -> Result<Self, CompileError> {
        let p = Self { min_duration, max_duration, reference_speed };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), CompileError> {
        let ok = self.min_duration > 0.0
            && self.min_duration <= self.max_duration
            && self.max_duration.is_finite()
            && self.reference_speed > 0.0
            && self.reference_speed.is_finite();
        if ok {
            Ok(())
        } else {
            Err(CompileError::InvalidArgument(format!(
                "transition policy needs 0 < min <= max and speed > 0, got {self:?}"
            )))
        }
    }
}

/// Start time, end time and gloss of one sign on the global timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignBoundary {
    pub start: f64,
    pub end: f64,
    pub gloss: String,
}

/// A resolved location anchor: where the wrist was aimed and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub gloss: String,
    pub kind: AnchorKind,
    pub time: f64,
    pub point: Vec3,
}

/// A compiled timeline. `signing_end` marks the end of signed content;
/// the stretch up to `duration` is the return to the rest pose.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnimationDocument {
    pub duration: f64,
    pub signing_end: f64,
    pub tracks: BTreeMap<JointName, Vec<RotationKey>>,
    pub nonmanual: Vec<NonmanualEvent>,
    pub boundaries: Vec<SignBoundary>,
    pub anchors: Vec<AnchorRecord>,
}

impl AnimationDocument {
    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty() && self.nonmanual.is_empty()
    }

    /// Tracked joints sampled at `t`.
    pub fn sample(&self, t: f64) -> Posture {
        self.tracks
            .iter()
            .map(|(j, keys)| (*j, sample_track(keys, t).expect("tracks are never empty")))
            .collect()
    }

    pub fn start_posture(&self) -> Posture {
        self.sample(0.0)
    }

    pub fn end_posture(&self) -> Posture {
        self.sample(self.signing_end)
    }

    /// Checks the timeline invariants: finite non-negative times inside
    /// `[0, duration]`, strictly increasing per track, unit rotations.
    pub fn check(&self) -> Result<(), String> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(format!("duration {} is not a non-negative number", self.duration));
        }
        if !(0.0..=self.duration).contains(&self.signing_end) {
            return Err(format!("signing end {} outside [0, {}]", self.signing_end, self.duration));
        }
        for (joint, keys) in &self.tracks {
            if keys.is_empty() {
                return Err(format!("{joint}: empty track"));
            }
            for k in keys {
                if !(0.0..=self.duration).contains(&k.time) {
                    return Err(format!("{joint}: key time {} outside [0, {}]", k.time, self.duration));
                }
                if (k.rotation.norm() - 1.0).abs() > 1e-9 {
                    return Err(format!("{joint}: non-unit rotation at t={}", k.time));
                }
            }
            if let Some(w) = keys.windows(2).find(|w| w[1].time <= w[0].time) {
                return Err(format!("{joint}: key times {} then {} not increasing", w[0].time, w[1].time));
            }
        }
        if !self.is_empty() && self.duration <= 0.0 {
            return Err("non-empty document with zero duration".into());
        }
        Ok(())
    }

    /// Largest per-segment angular velocity over all tracks.
    pub fn max_angular_velocity(&self) -> f64 {
        self.tracks
            .values()
            .flat_map(|keys| keys.windows(2))
            .map(|w| crate::rotation::angular_distance(w[0].rotation, w[1].rotation) / (w[1].time - w[0].time))
            .fold(0.0, f64::max)
    }

    fn strip_tail(&self) -> AnimationDocument {
        let mut out = self.clone();
        for keys in out.tracks.values_mut() {
            keys.retain(|k| k.time <= self.signing_end);
        }
        out.tracks.retain(|_, keys| !keys.is_empty());
        out.duration = self.signing_end;
        out
    }

    fn shifted(mut self, offset: f64) -> AnimationDocument {
        for keys in self.tracks.values_mut() {
            for k in keys.iter_mut() {
                k.time += offset;
            }
        }
        for e in &mut self.nonmanual {
            e.time += offset;
        }
        for b in &mut self.boundaries {
            b.start += offset;
            b.end += offset;
        }
        for a in &mut self.anchors {
            a.time += offset;
        }
        self.duration += offset;
        self.signing_end += offset;
        self
    }
}

fn sign_error(gloss: &str, message: impl Into<String>) -> CompileError {
    CompileError::Sign { gloss: gloss.to_string(), message: message.into() }
}

fn upsert(keys: &mut Vec<RotationKey>, key: RotationKey) {
    match keys.binary_search_by(|k| k.time.total_cmp(&key.time)) {
        Ok(i) => keys[i] = key,
        Err(i) => keys.insert(i, key),
    }
}

fn arm_side(sign: &SignEntry) -> Side {
    let Some(phon) = &sign.phonology else { return Side::Right };
    let arm = |s: Side| [JointName::shoulder(s), JointName::elbow(s), JointName::wrist(s)];
    let uses = |s: Side| phon.channels.iter().any(|c| arm(s).contains(&c.joint));
    if uses(Side::Left) && !uses(Side::Right) {
        Side::Left
    } else {
        Side::Right
    }
}

/// Compiles one simple sign onto a timeline starting at 0. Placeholder
/// anchors take the given override points; literal anchors use their own.
pub fn compile_sign(
    sign: &SignEntry,
    lex: &Lexicon,
    start_override: Option<Vec3>,
    end_override: Option<Vec3>,
) -> Result<AnimationDocument, CompileError> {
    let gloss = sign.gloss.as_str();
    if sign.is_compound() {
        return Err(sign_error(gloss, "compound signs are compiled through expand_compound"));
    }
    let phon = sign
        .phonology
        .as_ref()
        .filter(|p| !p.channels.is_empty())
        .ok_or_else(|| sign_error(gloss, "sign has no channels"))?;

    let motion = phon.motion_duration();
    let duration = if motion > 0.0 { motion } else { STATIC_HOLD };

    let mut tracks: BTreeMap<JointName, Vec<RotationKey>> = BTreeMap::new();
    for ch in &phon.channels {
        if ch.keys.is_empty() {
            return Err(sign_error(gloss, format!("channel {} has no keys", ch.joint)));
        }
        if tracks.insert(ch.joint, ch.keys.clone()).is_some() {
            return Err(sign_error(gloss, format!("joint {} has two channels", ch.joint)));
        }
    }

    let mut events = phon.handshape_events.clone();
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut finger_tracks: BTreeMap<JointName, Vec<RotationKey>> = BTreeMap::new();
    for e in &events {
        let posture = apply_handshape(&Posture::new(), e.side, &e.handshape, lex.handshapes())
            .map_err(|err: SkeletonError| sign_error(gloss, err.to_string()))?;
        for joint in JointName::finger_joints(e.side) {
            upsert(finger_tracks.entry(joint).or_default(), RotationKey::new(e.time, posture.get(joint)));
        }
    }
    for (joint, keys) in finger_tracks {
        if tracks.contains_key(&joint) {
            return Err(sign_error(gloss, format!("joint {joint} has both a channel and a handshape event")));
        }
        tracks.insert(joint, keys);
    }

    let mut anchors = Vec::new();
    let side = arm_side(sign);
    let rest = neutral_posture();
    for (kind, time, supplied) in [
        (AnchorKind::Start, 0.0, start_override),
        (AnchorKind::End, duration, end_override),
    ] {
        let point = match phon.anchor(kind) {
            None => {
                if supplied.is_some() {
                    return Err(CompileError::InvalidArgument(format!(
                        "sign {gloss} has no {kind} anchor to override"
                    )));
                }
                continue;
            }
            Some(AnchorTarget::Point(p)) => supplied.unwrap_or(p),
            Some(AnchorTarget::Placeholder(placeholder)) => supplied
                .ok_or_else(|| CompileError::MissingLocus { gloss: gloss.to_string(), placeholder })?,
        };
        if !point.iter().all(|c| c.is_finite()) {
            return Err(CompileError::InvalidArgument(format!("anchor point {point:?} is not finite")));
        }
        let (shoulder, elbow) = arm_aim(point, side);
        for (joint, q) in [(JointName::shoulder(side), shoulder), (JointName::elbow(side), elbow)] {
            let keys = tracks.entry(joint).or_default();
            if keys.is_empty() && time > 0.0 {
                keys.push(RotationKey::new(0.0, rest.get(joint)));
            }
            upsert(keys, RotationKey::new(time, q));
        }
        anchors.push(AnchorRecord { gloss: gloss.to_string(), kind, time, point });
    }

    // Every track holds its last pose to the end of the sign.
    for keys in tracks.values_mut() {
        let last = *keys.last().expect("non-empty");
        if last.time < duration {
            keys.push(RotationKey::new(duration, last.rotation));
        }
    }

    let mut nonmanual = phon.nonmanual.clone();
    nonmanual.sort_by(|a, b| a.time.total_cmp(&b.time));
    let doc = AnimationDocument {
        duration,
        signing_end: duration,
        tracks,
        nonmanual,
        boundaries: vec![SignBoundary { start: 0.0, end: duration, gloss: gloss.to_string() }],
        anchors,
    };
    doc.check().map_err(|m| sign_error(gloss, m))?;
    Ok(doc)
}

/// Compiles the leaves of a compound sign in signing order, each on its own
/// local timeline. A simple sign yields itself.
pub fn expand_compound(sign: &SignEntry, lex: &Lexicon) -> Result<Vec<AnimationDocument>, CompileError> {
    let mut leaves = Vec::new();
    let mut chain = Vec::new();
    flatten(sign, lex, &mut chain, &mut leaves)?;
    leaves.into_iter().map(|s| compile_sign(s, lex, None, None)).collect()
}

fn flatten<'a>(
    sign: &'a SignEntry,
    lex: &'a Lexicon,
    chain: &mut Vec<String>,
    out: &mut Vec<&'a SignEntry>,
) -> Result<(), CompileError> {
    let Some(parts) = sign.compound.as_ref().filter(|p| !p.is_empty()) else {
        out.push(sign);
        return Ok(());
    };
    chain.push(sign.gloss.clone());
    if chain[..chain.len() - 1].contains(&sign.gloss) {
        return Err(CompileError::Compound { chain: chain.clone(), message: "cycle".into() });
    }
    if chain.len() > crate::lexicon::MAX_COMPOUND_DEPTH {
        return Err(CompileError::Compound {
            chain: chain.clone(),
            message: format!("nesting deeper than {}", crate::lexicon::MAX_COMPOUND_DEPTH),
        });
    }
    for p in parts {
        let part = lex.sign(p).ok_or_else(|| CompileError::Compound {
            chain: chain.clone(),
            message: format!("unknown gloss {p:?}"),
        })?;
        flatten(part, lex, chain, out)?;
    }
    chain.pop();
    Ok(())
}

/// Compiles a sign of either kind; compounds are joined without a rest tail.
pub fn compile_entry(
    sign: &SignEntry,
    lex: &Lexicon,
    start_override: Option<Vec3>,
    end_override: Option<Vec3>,
    policy: &TransitionPolicy,
) -> Result<AnimationDocument, CompileError> {
    if sign.is_compound() {
        if start_override.is_some() || end_override.is_some() {
            return Err(CompileError::InvalidArgument(format!(
                "compound sign {} takes no locus overrides",
                sign.gloss
            )));
        }
        join(&expand_compound(sign, lex)?, policy)
    } else {
        compile_sign(sign, lex, start_override, end_override)
    }
}

pub fn transition_duration(a: &Posture, b: &Posture, p: &TransitionPolicy) -> f64 {
    (posture_distance(a, b) / p.reference_speed).clamp(p.min_duration, p.max_duration)
}

fn restrict(p: &Posture, to: &Posture) -> Posture {
    p.iter().filter(|(j, _)| to.joints().any(|k| k == *j)).collect()
}

/// Sequences documents with transition gaps but no rest tail.
pub fn join(docs: &[AnimationDocument], p: &TransitionPolicy) -> Result<AnimationDocument, CompileError> {
    p.check()?;
    let (first, rest) = docs
        .split_first()
        .ok_or_else(|| CompileError::InvalidArgument("nothing to concatenate".into()))?;
    for (i, d) in docs.iter().enumerate() {
        if d.is_empty() || d.signing_end <= 0.0 {
            return Err(CompileError::InvalidArgument(format!("document {i} is empty")));
        }
    }
    let mut out = first.strip_tail();
    for next in rest {
        let next = next.strip_tail();
        let start = next.start_posture();
        let end = out.end_posture();
        let gap = transition_duration(&restrict(&end, &start), &restrict(&start, &end), p);
        let offset = out.signing_end + gap;
        let next = next.shifted(offset);
        for (joint, keys) in next.tracks {
            out.tracks.entry(joint).or_default().extend(keys);
        }
        out.nonmanual.extend(next.nonmanual);
        out.boundaries.extend(next.boundaries);
        out.anchors.extend(next.anchors);
        out.signing_end = next.signing_end;
        out.duration = next.duration;
    }
    out.check().map_err(CompileError::InvalidArgument)?;
    Ok(out)
}

/// Sequences documents and ends with a transition back to the rest pose.
pub fn concatenate(docs: &[AnimationDocument], p: &TransitionPolicy) -> Result<AnimationDocument, CompileError> {
    let mut out = join(docs, p)?;
    let end = out.end_posture();
    let neutral = neutral_posture();
    let rest: Posture = end.joints().map(|j| (j, neutral.get(j))).collect();
    let gap = transition_duration(&end, &rest, p);
    let t = out.signing_end + gap;
    for (joint, keys) in out.tracks.iter_mut() {
        keys.push(RotationKey::new(t, rest.get(*joint)));
    }
    out.duration = t;
    out.check().map_err(CompileError::InvalidArgument)?;
    Ok(out)
}

/// Adds `overlay`'s tracks and cues to `base`. A joint keyed by both over
/// intersecting time spans is a conflict.
pub fn merge_simultaneous(base: &AnimationDocument, overlay: &AnimationDocument) -> Result<AnimationDocument, CompileError> {
    if overlay.duration > base.duration {
        return Err(CompileError::InvalidArgument(format!(
            "overlay duration {} exceeds base duration {}",
            overlay.duration, base.duration
        )));
    }
    let mut out = base.clone();
    for (joint, keys) in &overlay.tracks {
        match out.tracks.get_mut(joint) {
            None => {
                out.tracks.insert(*joint, keys.clone());
            }
            Some(existing) => {
                let span = |k: &[RotationKey]| (k[0].time, k[k.len() - 1].time);
                let (a0, a1) = span(existing);
                let (b0, b1) = span(keys);
                if a0 <= b1 && b0 <= a1 {
                    return Err(CompileError::Conflict { joint: *joint, start: a0.max(b0), end: a1.min(b1) });
                }
                existing.extend(keys.iter().copied());
                existing.sort_by(|x, y| x.time.total_cmp(&y.time));
            }
        }
    }
    out.nonmanual.extend(overlay.nonmanual.iter().copied());
    out.nonmanual.sort_by(|a, b| a.time.total_cmp(&b.time));
    out.anchors.extend(overlay.anchors.iter().cloned());
    out.signing_end = out.signing_end.max(overlay.signing_end);
    Ok(out)
}

pub fn retime(doc: &AnimationDocument, scale: f64) -> Result<AnimationDocument, CompileError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CompileError::InvalidArgument(format!("retime scale {scale} must be positive")));
    }
    let mut out = doc.clone();
    for keys in out.tracks.values_mut() {
        for k in keys.iter_mut() {
            k.time *= scale;
        }
    }
    for e in &mut out.nonmanual {
        e.time *= scale;
    }
    for b in &mut out.boundaries {
        b.start *= scale;
        b.end *= scale;
    }
    for a in &mut out.anchors {
        a.time *= scale;
    }
    out.duration *= scale;
    out.signing_end *= scale;
    Ok(out)
}
