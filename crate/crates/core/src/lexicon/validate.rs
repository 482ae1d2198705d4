use std::collections::{BTreeMap, BTreeSet};

use super::{
    Agreement, AnchorKind, Diagnostic, Lexicon, LocusPlaceholder, SignEntry, ARABIC_BASE_LETTERS,
    MAX_COMPOUND_DEPTH,
};

/// Checks every lexicon invariant. Errors first by sign, then alphabet
/// warnings; the list is empty exactly when nothing is wrong.
pub fn validate(lex: &Lexicon) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for sign in lex.signs() {
        check_sign(lex, sign, &mut out);
    }
    check_compounds(lex, &mut out);
    check_alphabet(lex, &mut out);
    out
}

fn check_sign(lex: &Lexicon, sign: &SignEntry, out: &mut Vec<Diagnostic>) {
    let g = Some(sign.gloss.as_str());
    if sign.gloss.trim().is_empty() {
        out.push(Diagnostic::error(g, "sign@gloss", "gloss is empty"));
    }
    let has_channels = sign.phonology.as_ref().is_some_and(|p| !p.channels.is_empty());
    match (has_channels, sign.compound.is_some()) {
        (true, true) => out.push(Diagnostic::error(g, "sign", "sign has both channels and a compound list")),
        (false, false) => out.push(Diagnostic::error(g, "sign", "sign has neither channels nor a compound list")),
        _ => {}
    }
    if sign.compound.is_some() && sign.phonology.is_some() && !has_channels {
        out.push(Diagnostic::error(g, "phonology", "a compound sign cannot carry phonology"));
    }
    if let Some(parts) = &sign.compound {
        if parts.is_empty() {
            out.push(Diagnostic::error(g, "compound", "compound list is empty"));
        }
        for p in parts {
            if lex.sign(p).is_none() {
                out.push(Diagnostic::error(g, "compound/ref", format!("references unknown gloss {p:?}")));
            }
        }
    }

    let placeholders: BTreeSet<LocusPlaceholder> = sign
        .phonology
        .iter()
        .flat_map(|p| p.placeholders().map(|(_, ph)| ph))
        .collect();
    match sign.agreement() {
        Agreement::None if !placeholders.is_empty() => out.push(Diagnostic::error(
            g,
            "anchor@ref",
            "locus placeholders require an agreeing verb",
        )),
        Agreement::None => {}
        agreement if placeholders.is_empty() => out.push(Diagnostic::error(
            g,
            "syntax@agreement",
            format!("agreement {agreement} requires SUBJ_LOCUS/OBJ_LOCUS anchors"),
        )),
        agreement => {
            let mut needed = vec![LocusPlaceholder::Subject];
            if agreement == Agreement::SubjectObject {
                needed.push(LocusPlaceholder::Object);
            }
            for n in needed {
                if !placeholders.contains(&n) {
                    out.push(Diagnostic::error(g, "anchor@ref", format!("agreement {agreement} requires a {n} anchor")));
                }
            }
        }
    }

    let Some(phon) = &sign.phonology else { return };
    let mut joints = BTreeSet::new();
    for ch in &phon.channels {
        let field = format!("channel[{}]", ch.joint);
        if !joints.insert(ch.joint) {
            out.push(Diagnostic::error(g, &field, "joint has more than one channel"));
        }
        let Some(first) = ch.keys.first() else {
            out.push(Diagnostic::error(g, &field, "channel has no keys"));
            continue;
        };
        if first.time != 0.0 {
            out.push(Diagnostic::error(g, &field, format!("first key must be at t=0, found t={}", first.time)));
        }
        for k in &ch.keys {
            if !k.time.is_finite() || k.time < 0.0 {
                out.push(Diagnostic::error(g, &field, format!("key time {} is not a non-negative number", k.time)));
            }
            if !k.rotation.is_finite() || (k.rotation.norm() - 1.0).abs() > 1e-6 {
                out.push(Diagnostic::error(g, &field, format!("key at t={} is not a unit rotation", k.time)));
            }
        }
        for w in ch.keys.windows(2) {
            if w[1].time <= w[0].time {
                out.push(Diagnostic::error(
                    g,
                    &field,
                    format!("key times must be strictly increasing: {} follows {}", w[1].time, w[0].time),
                ));
            }
        }
    }
    for e in &phon.handshape_events {
        if !e.time.is_finite() || e.time < 0.0 {
            out.push(Diagnostic::error(g, "handshapeEvent@t", format!("time {} is not a non-negative number", e.time)));
        }
        if !lex.handshapes().contains(&e.handshape) {
            out.push(Diagnostic::error(g, "handshapeEvent@name", format!("unknown handshape {:?}", e.handshape.as_str())));
        }
    }
    for kind in AnchorKind::ALL {
        if phon.anchors.iter().filter(|a| a.kind == *kind).count() > 1 {
            out.push(Diagnostic::error(g, "anchor@kind", format!("more than one {kind} anchor")));
        }
    }
    for n in &phon.nonmanual {
        if !n.time.is_finite() || n.time < 0.0 {
            out.push(Diagnostic::error(g, "nonmanual@t", format!("time {} is not a non-negative number", n.time)));
        }
        if !(0.0..=1.0).contains(&n.intensity) {
            out.push(Diagnostic::error(g, "nonmanual@intensity", format!("intensity {} is outside [0, 1]", n.intensity)));
        }
    }
}

// Depth-first walk over compound references. A simple sign has depth 0 and a
// compound one more than its deepest part.
fn check_compounds(lex: &Lexicon, out: &mut Vec<Diagnostic>) {
    let mut depth: BTreeMap<&str, Option<usize>> = BTreeMap::new();
    for sign in lex.signs().filter(|s| s.compound.is_some()) {
        let mut chain = Vec::new();
        walk(lex, &sign.gloss, &mut chain, &mut depth, out);
    }
    for (gloss, d) in &depth {
        if let Some(d) = d {
            if *d > MAX_COMPOUND_DEPTH {
                out.push(Diagnostic::error(
                    Some(gloss),
                    "compound",
                    format!("compound nesting depth {d} exceeds {MAX_COMPOUND_DEPTH}"),
                ));
            }
        }
    }
}

fn walk<'a>(
    lex: &'a Lexicon,
    gloss: &'a str,
    chain: &mut Vec<&'a str>,
    depth: &mut BTreeMap<&'a str, Option<usize>>,
    out: &mut Vec<Diagnostic>,
) -> Option<usize> {
    if let Some(pos) = chain.iter().position(|g| *g == gloss) {
        let mut cycle: Vec<&str> = chain[pos..].to_vec();
        cycle.push(gloss);
        out.push(Diagnostic::error(Some(gloss), "compound", format!("compound cycle {}", cycle.join(" -> "))));
        return None;
    }
    if let Some(d) = depth.get(gloss) {
        return *d;
    }
    let sign = lex.sign(gloss)?;
    let Some(parts) = &sign.compound else {
        return Some(0);
    };
    chain.push(gloss);
    let mut result = Some(0);
    for p in parts {
        match (walk(lex, p, chain, depth, out), result) {
            (Some(d), Some(r)) => result = Some(r.max(d)),
            _ => result = None,
        }
    }
    chain.pop();
    let result = result.map(|d| d + 1);
    depth.insert(gloss, result);
    result
}

fn check_alphabet(lex: &Lexicon, out: &mut Vec<Diagnostic>) {
    for (c, gloss) in lex.alphabet() {
        if lex.sign(gloss).is_none() {
            out.push(Diagnostic::error(
                Some(gloss),
                "alphabet/letter@gloss",
                format!("letter {c:?} maps to unknown gloss {gloss:?}"),
            ));
        }
    }
    for c in ARABIC_BASE_LETTERS {
        if !lex.alphabet().contains_key(&c) {
            out.push(Diagnostic::warning(None, "alphabet", format!("no fingerspelling sign for letter {c:?}")));
        }
    }
}
