//! Random test data shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, RngExt};
use signforge_core::lexicon::{
    Agreement, Anchor, AnchorKind, AnchorTarget, Category, HandshapeEvent, JointChannel, Lexicon,
    LocusPlaceholder, NonmanualCue, NonmanualEvent, Phonology, Semantics, SignEntry, ARABIC_BASE_LETTERS,
};
use signforge_core::rotation::{EulerYpr, Quaternion, RotationKey};
use signforge_core::skeleton::{Handshape, HandshapeInventory, HandshapeName, JointName, Side};

pub fn fixture_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/lexicon.xml")).unwrap()
}

pub fn data_text(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Uniform random rotation (Shoemake).
pub fn random_unit<R: Rng>(rng: &mut R) -> Quaternion {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos());
    if q.w < 0.0 { -q } else { q }
}

pub fn random_ypr<R: Rng>(rng: &mut R, pitch_limit: f64) -> EulerYpr {
    let pi = std::f64::consts::PI;
    EulerYpr::new(rng.random_range(-pi..pi), rng.random_range(-pitch_limit..pitch_limit), rng.random_range(-pi..pi))
}

const LEMMAS: [&str; 8] = ["كتاب", "بيت", "ولد", "بنت", "قلم", "مدرسة", "شجرة", "ماء"];
const FRAMES: [&str; 4] = ["Assistance", "Arriving", "Reading", "Giving"];

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn random_phonology<R: Rng>(rng: &mut R, shapes: &[HandshapeName], agreement: Agreement) -> Phonology {
    let mut joints: Vec<JointName> = JointName::ALL.to_vec();
    let n_channels = rng.random_range(1..=4);
    let mut channels = Vec::new();
    for _ in 0..n_channels {
        let joint = joints.swap_remove(rng.random_range(0..joints.len()));
        let mut t = 0.0;
        let keys = (0..rng.random_range(1..=5))
            .map(|k| {
                if k > 0 {
                    t += rng.random_range(0.05..0.5);
                }
                RotationKey::new(t, random_unit(rng))
            })
            .collect();
        channels.push(JointChannel { joint, keys });
    }
    let handshape_events = (0..rng.random_range(0..3))
        .map(|_| HandshapeEvent {
            time: rng.random_range(0.0..1.0),
            side: if rng.random_bool(0.5) { Side::Right } else { Side::Left },
            handshape: pick(rng, shapes).clone(),
        })
        .collect();
    let point = |rng: &mut R| AnchorTarget::Point([rng.random_range(-0.5..0.5), rng.random_range(0.8..1.6), rng.random_range(0.0..0.5)]);
    let mut anchors = Vec::new();
    match agreement {
        Agreement::None => {
            if rng.random_bool(0.3) {
                anchors.push(Anchor { kind: AnchorKind::End, target: point(rng) });
            }
        }
        Agreement::Subject => {
            anchors.push(Anchor { kind: AnchorKind::Start, target: AnchorTarget::Placeholder(LocusPlaceholder::Subject) });
            if rng.random_bool(0.5) {
                anchors.push(Anchor { kind: AnchorKind::End, target: point(rng) });
            }
        }
        Agreement::SubjectObject => {
            anchors.push(Anchor { kind: AnchorKind::Start, target: AnchorTarget::Placeholder(LocusPlaceholder::Subject) });
            anchors.push(Anchor { kind: AnchorKind::End, target: AnchorTarget::Placeholder(LocusPlaceholder::Object) });
        }
    }
    let nonmanual = (0..rng.random_range(0..3))
        .map(|_| NonmanualEvent {
            time: rng.random_range(0.0..1.0),
            cue: *pick(rng, NonmanualCue::ALL),
            intensity: rng.random_range(0.0..=1.0),
        })
        .collect();
    Phonology { channels, handshape_events, anchors, nonmanual }
}

fn random_semantics<R: Rng>(rng: &mut R) -> Semantics {
    let mut lemmas: Vec<String> = Vec::new();
    for _ in 0..rng.random_range(0..3) {
        let l = pick(rng, &LEMMAS).to_string();
        if !lemmas.contains(&l) {
            lemmas.push(l);
        }
    }
    Semantics {
        lemmas,
        frame: rng.random_bool(0.4).then(|| pick(rng, &FRAMES).to_string()),
        role: rng.random_bool(0.2).then(|| "Theme".to_string()),
        subject_role: rng.random_bool(0.2).then(|| "Agent".to_string()),
        object_role: rng.random_bool(0.1).then(|| "Patient".to_string()),
    }
}

/// A random lexicon that passes validation with zero errors.
pub fn random_lexicon<R: Rng>(rng: &mut R) -> Lexicon {
    let mut handshapes = if rng.random_bool(0.5) { HandshapeInventory::standard() } else { HandshapeInventory::new() };
    for k in 0..rng.random_range(1..4) {
        let mut shape = Handshape::default();
        for r in shape.rotations.iter_mut() {
            *r = random_unit(rng);
        }
        handshapes.insert(HandshapeName::new(format!("H{k}")), shape);
    }
    let shapes: Vec<HandshapeName> = handshapes.names().cloned().collect();

    let mut signs = Vec::new();
    let n_simple = rng.random_range(1..10);
    for k in 0..n_simple {
        let agreement = *pick(rng, Agreement::ALL);
        let mut sign = SignEntry::simple(format!("S{k:02}"), random_phonology(rng, &shapes, agreement))
            .with_semantics(random_semantics(rng));
        if agreement != Agreement::None || rng.random_bool(0.7) {
            let category = if agreement != Agreement::None { Category::Verb } else { *pick(rng, Category::ALL) };
            sign = sign.with_syntax(category, agreement);
        }
        signs.push(sign);
    }
    for k in 0..rng.random_range(0..3) {
        let parts = (0..rng.random_range(1..4)).map(|_| format!("S{:02}", rng.random_range(0..n_simple))).collect();
        signs.push(SignEntry::compound(format!("C{k}"), parts).with_semantics(random_semantics(rng)));
    }

    let mut alphabet = BTreeMap::new();
    for c in ARABIC_BASE_LETTERS {
        if rng.random_bool(0.2) {
            alphabet.insert(c, format!("S{:02}", rng.random_range(0..n_simple)));
        }
    }
    let language = *pick(rng, &["LSA", "ArSL", "x-test"]);
    Lexicon::new(language, handshapes, alphabet, signs)
}
