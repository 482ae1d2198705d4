//! Regenerates `data/lexicon.xml`, the demo lexicon used by the tests and the
//! CLI examples:
//!
//!     cargo run -p signforge-core --example fixture_lexicon > data/lexicon.xml

use std::collections::BTreeMap;

use signforge_core::lexicon::{
    serialize_lexicon, Agreement, Anchor, AnchorKind, AnchorTarget, Category, HandshapeEvent,
    JointChannel, Lexicon, LocusPlaceholder, NonmanualCue, NonmanualEvent, Phonology, Semantics,
    SignEntry, ARABIC_BASE_LETTERS,
};
use signforge_core::rotation::{ypr_to_quaternion, EulerYpr, RotationKey};
use signforge_core::skeleton::{letter_handshape_name, HandshapeInventory, HandshapeName, JointName, Side};

const LETTER_NAMES: [&str; 28] = [
    "ALIF", "BA", "TA", "THA", "JIM", "HHA", "KHA", "DAL", "THAL", "RA", "ZAY", "SIN", "SHIN", "SAD",
    "DAD", "TAH", "ZAH", "AIN", "GHAIN", "FA", "QAF", "KAF", "LAM", "MIM", "NUN", "HA", "WAW", "YA",
];

fn channel(joint: JointName, keys: &[(f64, [f64; 3])]) -> JointChannel {
    JointChannel {
        joint,
        keys: keys
            .iter()
            .map(|(t, [y, p, r])| RotationKey::new(*t, ypr_to_quaternion(EulerYpr::new(*y, *p, *r)).unwrap()))
            .collect(),
    }
}

fn hand(t: f64, name: &str) -> HandshapeEvent {
    HandshapeEvent { time: t, side: Side::Right, handshape: HandshapeName::new(name) }
}

fn sem(lemmas: &[&str], frame: Option<&str>) -> Semantics {
    Semantics {
        lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
        frame: frame.map(str::to_string),
        ..Semantics::default()
    }
}

// Right arm raised in front of the chest, forearm up.
fn arm(t: f64, lift: f64, swing: f64, bend: f64) -> Vec<(JointName, (f64, [f64; 3]))> {
    vec![
        (JointName::RShoulder, (t, [swing, 0.0, lift])),
        (JointName::RElbow, (t, [bend, 0.0, 0.0])),
    ]
}

fn arm_channels(poses: &[(f64, f64, f64, f64)], wrist: &[(f64, [f64; 3])]) -> Vec<JointChannel> {
    let mut by_joint: BTreeMap<JointName, Vec<(f64, [f64; 3])>> = BTreeMap::new();
    for (t, lift, swing, bend) in poses {
        for (j, k) in arm(*t, *lift, *swing, *bend) {
            by_joint.entry(j).or_default().push(k);
        }
    }
    let mut out: Vec<JointChannel> = by_joint.iter().map(|(j, k)| channel(*j, k)).collect();
    out.push(channel(JointName::RWrist, wrist));
    out
}

fn noun(gloss: &str, lemmas: &[&str], shape: &str, poses: &[(f64, f64, f64, f64)]) -> SignEntry {
    let end = poses.last().unwrap().0;
    let phon = Phonology {
        channels: arm_channels(poses, &[(0.0, [0.0, 0.0, 0.0]), (end, [0.0, 0.3, 0.0])]),
        handshape_events: vec![hand(0.0, shape)],
        ..Phonology::default()
    };
    SignEntry::simple(gloss, phon)
        .with_semantics(sem(lemmas, None))
        .with_syntax(Category::Noun, Agreement::None)
}

fn main() {
    let mut signs = Vec::new();
    let mut alphabet = BTreeMap::new();

    for (k, (c, name)) in ARABIC_BASE_LETTERS.iter().zip(LETTER_NAMES).enumerate() {
        let gloss = format!("FS_{name}");
        let phon = Phonology {
            channels: arm_channels(&[(0.0, 0.9, 0.4, 1.6)], &[(0.0, [0.0, 0.0, 0.0])]),
            handshape_events: vec![HandshapeEvent {
                time: 0.0,
                side: Side::Right,
                handshape: letter_handshape_name(k),
            }],
            ..Phonology::default()
        };
        signs.push(SignEntry::simple(&gloss, phon));
        alphabet.insert(*c, gloss);
    }

    let help = Phonology {
        channels: vec![
            channel(JointName::RShoulder, &[(0.0, [0.0, 0.4, 0.0]), (0.6, [0.3, 0.9, 0.0])]),
            channel(JointName::RWrist, &[(0.0, [0.0, 0.0, 0.0]), (0.6, [0.0, 0.2, 0.0])]),
        ],
        handshape_events: vec![hand(0.0, "FLAT")],
        anchors: vec![
            Anchor { kind: AnchorKind::Start, target: AnchorTarget::Placeholder(LocusPlaceholder::Subject) },
            Anchor { kind: AnchorKind::End, target: AnchorTarget::Placeholder(LocusPlaceholder::Object) },
        ],
        nonmanual: vec![NonmanualEvent { time: 0.1, cue: NonmanualCue::EyeGazeRight, intensity: 0.8 }],
    };
    signs.push(
        SignEntry::simple("HELP", help)
            .with_semantics(Semantics {
                subject_role: Some("Helper".into()),
                object_role: Some("Benefited".into()),
                ..sem(&["ساعد"], Some("Assistance"))
            })
            .with_syntax(Category::Verb, Agreement::SubjectObject),
    );

    let come = Phonology {
        channels: vec![
            channel(JointName::RWrist, &[(0.0, [0.0, 0.0, 0.0]), (0.5, [0.0, -0.3, 0.0])]),
        ],
        handshape_events: vec![hand(0.0, "INDEX")],
        anchors: vec![
            Anchor { kind: AnchorKind::Start, target: AnchorTarget::Placeholder(LocusPlaceholder::Subject) },
            Anchor { kind: AnchorKind::End, target: AnchorTarget::Point([0.0, 1.2, 0.25]) },
        ],
        nonmanual: vec![],
    };
    signs.push(
        SignEntry::simple("COME", come)
            .with_semantics(Semantics { subject_role: Some("Theme".into()), ..sem(&["جاء", "أتى"], Some("Arriving")) })
            .with_syntax(Category::Verb, Agreement::Subject),
    );

    let read = Phonology {
        channels: arm_channels(
            &[(0.0, 1.0, 0.5, 1.4), (0.35, 1.0, 0.5, 1.2), (0.7, 1.0, 0.5, 1.4)],
            &[(0.0, [0.0, 0.0, 0.0]), (0.7, [0.0, 0.0, 0.0])],
        ),
        handshape_events: vec![hand(0.0, "HOOK")],
        nonmanual: vec![NonmanualEvent { time: 0.0, cue: NonmanualCue::HeadTilt, intensity: 0.4 }],
        ..Phonology::default()
    };
    signs.push(
        SignEntry::simple("READ", read)
            .with_semantics(sem(&["قرأ"], Some("Reading")))
            .with_syntax(Category::Verb, Agreement::None),
    );

    signs.push(noun("BOY", &["الولد", "ولد"], "INDEX", &[(0.0, 1.1, 0.3, 1.5), (0.5, 1.1, 0.3, 1.9)]));
    signs.push(noun("GIRL", &["البنت", "بنت"], "INDEX", &[(0.0, 1.0, 0.2, 1.7), (0.5, 1.0, 0.5, 1.9)]));
    signs.push(noun("TEACHER", &["المعلم", "معلم"], "SPREAD", &[(0.0, 0.9, 0.4, 1.2), (0.6, 0.7, 0.4, 1.2)]));
    signs.push(noun("BOOK", &["كتاب"], "FLAT", &[(0.0, 1.0, 0.6, 1.3), (0.4, 1.0, 0.6, 1.0)]));
    signs.push(noun("HOUSE", &["بيت"], "FLAT", &[(0.0, 0.8, 0.6, 1.0), (0.6, 0.9, 0.5, 1.1)]));
    signs.push(noun("HOME", &["بيت", "منزل"], "FIST", &[(0.0, 0.8, 0.4, 1.5), (0.4, 0.8, 0.4, 1.8)]));

    let flat_surface = Phonology {
        channels: arm_channels(
            &[(0.0, 1.0, 0.2, 1.0), (0.5, 1.0, 0.7, 1.0)],
            &[(0.0, [0.0, 0.0, 1.2]), (0.5, [0.0, 0.0, 1.2])],
        ),
        handshape_events: vec![hand(0.0, "FLAT")],
        ..Phonology::default()
    };
    signs.push(
        SignEntry::simple("FLAT_SURFACE", flat_surface)
            .with_semantics(sem(&["سطح"], None))
            .with_syntax(Category::Classifier, Agreement::None),
    );
    let above = Phonology {
        channels: arm_channels(
            &[(0.0, 1.0, 0.5, 1.0), (0.4, 0.6, 0.5, 0.9)],
            &[(0.0, [0.0, 0.0, 1.2]), (0.4, [0.0, 0.0, 1.4])],
        ),
        handshape_events: vec![hand(0.0, "FLAT")],
        nonmanual: vec![NonmanualEvent { time: 0.2, cue: NonmanualCue::BrowRaise, intensity: 0.5 }],
        ..Phonology::default()
    };
    signs.push(
        SignEntry::simple("ABOVE", above)
            .with_semantics(sem(&["فوق"], None))
            .with_syntax(Category::Adverb, Agreement::None),
    );
    signs.push(
        SignEntry::compound("CEILING", vec!["FLAT_SURFACE".into(), "ABOVE".into()])
            .with_semantics(sem(&["سقف"], None))
            .with_syntax(Category::Noun, Agreement::None),
    );

    let neg = Phonology {
        channels: vec![
            channel(JointName::Skullbase, &[(0.0, [0.0, 0.0, 0.0]), (0.2, [0.3, 0.0, 0.0]), (0.4, [-0.3, 0.0, 0.0]), (0.6, [0.0, 0.0, 0.0])]),
            channel(JointName::RWrist, &[(0.0, [0.3, 0.0, 0.0]), (0.3, [-0.3, 0.0, 0.0]), (0.6, [0.3, 0.0, 0.0])]),
        ],
        handshape_events: vec![hand(0.0, "INDEX")],
        nonmanual: vec![NonmanualEvent { time: 0.0, cue: NonmanualCue::BrowFurrow, intensity: 0.7 }],
        ..Phonology::default()
    };
    signs.push(
        SignEntry::simple("NEG", neg)
            .with_semantics(sem(&["لا"], None))
            .with_syntax(Category::Adverb, Agreement::None),
    );
    let past = Phonology {
        channels: arm_channels(
            &[(0.0, 1.2, 0.1, 1.9), (0.5, 1.4, -0.3, 2.2)],
            &[(0.0, [0.0, 0.0, 0.0]), (0.5, [0.0, 0.0, 0.0])],
        ),
        handshape_events: vec![hand(0.0, "FLAT")],
        ..Phonology::default()
    };
    signs.push(
        SignEntry::simple("PAST", past)
            .with_semantics(sem(&["ماضي"], None))
            .with_syntax(Category::Adverb, Agreement::None),
    );

    let lex = Lexicon::new("LSA", HandshapeInventory::standard(), alphabet, signs);
    print!("{}", serialize_lexicon(&lex));
}
