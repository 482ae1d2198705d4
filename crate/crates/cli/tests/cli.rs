use std::path::PathBuf;

use signforge_cli::run_cli_with;
use signforge_core::x3d::validate_emission;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str], env: Option<&str>) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("signforge").chain(args.iter().copied());
    let code = run_cli_with(argv, env, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

#[test]
fn validate_fixture_succeeds() {
    let r = run(&["validate", &data("lexicon.xml")], None);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("ok"));
}

#[test]
fn validate_reports_errors_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xml");
    let text = std::fs::read_to_string(data("lexicon.xml")).unwrap();
    std::fs::write(&bad, text.replacen("<ref gloss=\"ABOVE\"/>", "<ref gloss=\"NOWHERE\"/>", 1)).unwrap();
    let r = run(&["validate", bad.to_str().unwrap()], None);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("NOWHERE"), "{}", r.err);

    std::fs::write(&bad, "<lexicon lang=\"x\"><sign").unwrap();
    let r = run(&["validate", bad.to_str().unwrap()], None);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("line 1"), "{}", r.err);
}

#[test]
fn compile_help_emits_valid_scene() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("help.x3d");
    let r = run(&["compile", "--lexicon", &data("lexicon.xml"), "--signs", "HELP", "--out", out.to_str().unwrap()], None);
    assert_eq!(r.code, 0, "{}", r.err);
    let x3d = std::fs::read_to_string(&out).unwrap();
    assert_eq!(validate_emission(&x3d), vec![]);
}

#[test]
fn compile_to_stdout_and_html() {
    let r = run(&["compile", "--lexicon", &data("lexicon.xml"), "--signs", "BOY,HELP,GIRL"], None);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(validate_emission(&r.out), vec![]);
    let r = run(&["compile", "--lexicon", &data("lexicon.xml"), "--signs", "BOY", "--html"], None);
    assert_eq!(r.code, 0);
    assert!(r.out.starts_with("<!DOCTYPE html>"));
}

#[test]
fn translate_and_fingerspell_succeed() {
    let r = run(&["translate", "--lexicon", &data("lexicon.xml"), "--in", &data("sentences.json")], None);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(validate_emission(&r.out), vec![]);
    let r = run(&["fingerspell", "--lexicon", &data("lexicon.xml"), "--word", "كتب"], None);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(validate_emission(&r.out), vec![]);
}

#[test]
fn translate_with_unknown_verb_and_unspellable_lemma_fails_in_planning() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.json");
    std::fs::write(&input, r#"{"frame": "Flying", "elements": {"Pilot": {"lemma": "pilot", "id": "p"}}}"#).unwrap();
    let r = run(&["translate", "--lexicon", &data("lexicon.xml"), "--in", input.to_str().unwrap()], None);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("planning"), "{}", r.err);
    assert!(r.err.contains("fingerspell"), "{}", r.err);
}

#[test]
fn domain_errors_exit_one() {
    let lex = data("lexicon.xml");
    let cases: &[&[&str]] = &[
        &["compile", "--lexicon", &lex, "--signs", "NO_SUCH_SIGN"],
        &["fingerspell", "--lexicon", &lex, "--word", "abc"],
        &["translate", "--lexicon", &lex, "--in", "/nonexistent/s.json"],
        &["compile", "--lexicon", "/nonexistent/lex.xml", "--signs", "HELP"],
        &["validate", "/nonexistent/lex.xml"],
    ];
    for args in cases {
        let r = run(args, None);
        assert_eq!(r.code, 1, "{args:?}: {}", r.err);
        assert!(r.err.starts_with("error: "), "{args:?}: {}", r.err);
    }
}

#[test]
fn malformed_interlingua_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.json");
    std::fs::write(&input, "{\n  \"frame\": \"Assistance\",\n  \"elements\": [\n").unwrap();
    let r = run(&["translate", "--lexicon", &data("lexicon.xml"), "--in", input.to_str().unwrap()], None);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("line 3"), "{}", r.err);
}

#[test]
fn usage_errors_exit_two() {
    let lex = data("lexicon.xml");
    let cases: &[&[&str]] = &[
        &[],
        &["bogus"],
        &["compile", "--lexicon", &lex],
        &["compile", "--lexicon", &lex, "--signs", "HELP", "--frobnicate"],
        &["translate", "--lexicon", &lex],
        &["fingerspell", "--lexicon", &lex],
        &["serve", "--lexicon", &lex, "--port", "notaport"],
        &["compile", "--signs", "HELP"],
        &["--config", "/nonexistent/signforge.toml", "validate", &lex],
    ];
    for args in cases {
        let r = run(args, None);
        assert_eq!(r.code, 2, "{args:?}: {}", r.err);
        assert!(!r.err.is_empty(), "{args:?}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"], &["compile", "--help"], &["help"]] {
        let r = run(args, None);
        assert_eq!(r.code, 0, "{args:?}");
        assert!(!r.out.is_empty());
    }
}

#[test]
fn environment_overrides_flag() {
    // The flag names a missing file; the environment rescues it.
    let r = run(&["compile", "--lexicon", "/nonexistent.xml", "--signs", "HELP"], Some(&data("lexicon.xml")));
    assert_eq!(r.code, 0, "{}", r.err);
    let r = run(&["compile", "--lexicon", &data("lexicon.xml"), "--signs", "HELP"], Some("/nonexistent.xml"));
    assert_eq!(r.code, 1);
}

#[test]
fn config_supplies_lexicon_and_options() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("lexicon.xml"), dir.path().join("lex.xml")).unwrap();
    let cfg = dir.path().join("signforge.toml");
    std::fs::write(&cfg, "lexicon = \"lex.xml\"\n[emission]\nhumanoid_def_name = \"Amina\"\nloop = true\n").unwrap();
    let r = run(&["--config", cfg.to_str().unwrap(), "compile", "--signs", "BOY"], None);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("DEF=\"Amina\""));
    assert!(r.out.contains("loop=\"true\""));

    std::fs::write(&cfg, "[transition]\nmax_duration = -1.0\n").unwrap();
    let r = run(&["--config", cfg.to_str().unwrap(), "compile", "--signs", "BOY"], None);
    assert_eq!(r.code, 2);
}
