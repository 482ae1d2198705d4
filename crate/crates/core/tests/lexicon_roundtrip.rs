mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use signforge_core::lexicon::{parse_lexicon, serialize_lexicon, validate, Diagnostic, LookupKey};

#[test]
fn fixture_is_valid_and_canonical() {
    let text = common::fixture_text();
    let lex = parse_lexicon(&text).unwrap();
    assert_eq!(validate(&lex), Vec::<Diagnostic>::new());
    assert_eq!(serialize_lexicon(&lex), text, "data/lexicon.xml is not in canonical form");
}

#[test]
fn generator_makes_valid_lexica() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let lex = common::random_lexicon(&mut rng);
        let errors: Vec<_> = validate(&lex).into_iter().filter(Diagnostic::is_error).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_inverts_serialize(seed in any::<u64>()) {
        let lex = common::random_lexicon(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = serialize_lexicon(&lex);
        let back = parse_lexicon(&text).unwrap();
        prop_assert_eq!(back.structural_diff(&lex, 1e-6, 1e-6), None);
        // Serialization is idempotent after one pass through the text form.
        prop_assert_eq!(serialize_lexicon(&back), text);
    }

    #[test]
    fn indexes_are_consistent(seed in any::<u64>()) {
        let lex = common::random_lexicon(&mut ChaCha8Rng::seed_from_u64(seed));
        for sign in lex.signs() {
            prop_assert_eq!(lex.lookup(LookupKey::Gloss(&sign.gloss)).len(), 1);
            for lemma in &sign.semantics.lemmas {
                prop_assert!(lex.lemma_index()[lemma].contains(&sign.gloss));
            }
            if let Some(frame) = &sign.semantics.frame {
                prop_assert!(lex.frame_index()[frame].contains(&sign.gloss));
            }
        }
        for (lemma, glosses) in lex.lemma_index() {
            for g in glosses {
                prop_assert!(lex.sign(g).unwrap().semantics.lemmas.contains(lemma));
            }
        }
        for (frame, glosses) in lex.frame_index() {
            for g in glosses {
                prop_assert_eq!(lex.sign(g).unwrap().semantics.frame.as_ref(), Some(frame));
            }
        }
    }
}
