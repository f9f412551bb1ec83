//! End-to-end CLI checks: exit codes, file outputs, and the full
//! gen-synth -> disambiguate -> build-dataset -> eval chain.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_g2paug")
}

fn write_inputs(root: &Path) {
    fs::write(root.join("lexicon.txt"), common::LEXICON).unwrap();
    fs::write(root.join("inventory.tsv"), common::INVENTORY).unwrap();
    let spec = common::synth_spec(24, 8, 2, 0.0, 5);
    fs::write(root.join("spec.json"), serde_json::to_string(&spec).unwrap()).unwrap();
}

fn gen_corpus(root: &Path) -> Output {
    Command::new(bin())
        .arg("gen-synth")
        .arg("--spec")
        .arg(root.join("spec.json"))
        .arg("--lexicon")
        .arg(root.join("lexicon.txt"))
        .arg("--inventory")
        .arg(root.join("inventory.tsv"))
        .arg("--out")
        .arg(root.join("corpus"))
        .output()
        .unwrap()
}

fn disambiguate(root: &Path, out: &str) -> Output {
    Command::new(bin())
        .arg("disambiguate")
        .arg("--lexicon")
        .arg(root.join("lexicon.txt"))
        .arg("--inventory")
        .arg(root.join("inventory.tsv"))
        .arg("--manifest")
        .arg(root.join("corpus/manifest.jsonl"))
        .arg("--table")
        .arg(root.join("corpus/table.txt"))
        .arg("--out")
        .arg(root.join(out))
        .output()
        .unwrap()
}

#[test]
fn missing_lexicon_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    assert!(gen_corpus(dir.path()).status.success());
    let out = Command::new(bin())
        .arg("disambiguate")
        .arg("--lexicon")
        .arg(dir.path().join("no_such_file.txt"))
        .arg("--inventory")
        .arg(dir.path().join("inventory.tsv"))
        .arg("--manifest")
        .arg(dir.path().join("corpus/manifest.jsonl"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_manifest_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    fs::write(dir.path().join("bad.jsonl"), "not json\n").unwrap();
    let out = Command::new(bin())
        .arg("disambiguate")
        .arg("--lexicon")
        .arg(dir.path().join("lexicon.txt"))
        .arg("--inventory")
        .arg(dir.path().join("inventory.tsv"))
        .arg("--manifest")
        .arg(dir.path().join("bad.jsonl"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_threshold_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    assert!(gen_corpus(dir.path()).status.success());
    let out = Command::new(bin())
        .arg("stats")
        .arg("--results")
        .arg(dir.path().join("corpus/manifest.jsonl"))
        .arg("--thresholds")
        .arg("banana%")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_synth_unknown_form_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let mut spec = common::synth_spec(3, 8, 2, 0.0, 5);
    spec.sentences[0].planted = vec!["read_future".into()];
    fs::write(
        dir.path().join("spec.json"),
        serde_json::to_string(&spec).unwrap(),
    )
    .unwrap();
    let out = gen_corpus(dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    assert!(gen_corpus(dir.path()).status.success());
    let first = fs::read(dir.path().join("corpus/frames/s0000.alnf")).unwrap();
    fs::remove_dir_all(dir.path().join("corpus")).unwrap();
    assert!(gen_corpus(dir.path()).status.success());
    assert_eq!(fs::read(dir.path().join("corpus/frames/s0000.alnf")).unwrap(), first);
}

#[test]
fn full_chain_produces_datasets_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_inputs(root);
    assert!(gen_corpus(root).status.success());
    let out = disambiguate(root, "out");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = root.join("out/results.jsonl");
    assert_eq!(fs::read_to_string(&results).unwrap().lines().count(), 24);

    let out = Command::new(bin())
        .arg("build-dataset")
        .arg("--results")
        .arg(&results)
        .arg("--manifest")
        .arg(root.join("corpus/manifest.jsonl"))
        .arg("--lexicon")
        .arg(root.join("lexicon.txt"))
        .arg("--inventory")
        .arg(root.join("inventory.tsv"))
        .arg("--thresholds")
        .arg("0.00%,0.01%")
        .arg("--balance")
        .arg("--out")
        .arg(root.join("data"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t0 = fs::read_to_string(root.join("data/train_0p00pct.tsv")).unwrap();
    let t1 = fs::read_to_string(root.join("data/train_0p01pct.tsv")).unwrap();
    assert!(root.join("data/train_0p00pct_balanced.tsv").is_file());
    assert!(t1.lines().count() <= t0.lines().count());
    // zero-noise corpus: every record resolved, every line has two columns
    assert_eq!(t0.lines().count(), 24);
    for line in t0.lines() {
        assert_eq!(line.split('\t').count(), 2, "bad record: {line}");
    }

    // gold file agreeing with the planted forms -> zero FP at tau=0
    let mut gold = String::new();
    for i in 0..24 {
        gold.push_str(&format!("s{i:04}\t0\t{}\n", common::planted_form(i)));
    }
    fs::write(root.join("gold.tsv"), gold).unwrap();
    let out = Command::new(bin())
        .arg("eval")
        .arg("--results")
        .arg(&results)
        .arg("--gold")
        .arg(root.join("gold.tsv"))
        .arg("--thresholds")
        .arg("0%")
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    for line in table.lines().filter(|l| l.contains("\tFP\t")) {
        let fp: u64 = line.rsplit('\t').next().unwrap().parse().unwrap();
        assert_eq!(fp, 0, "unexpected FP in {line}");
    }
    assert!(table.trim_end().ends_with("24"), "total should be 24: {table}");
}

#[test]
fn precomputed_distance_mode() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_inputs(root);
    // single-word sentence "read": candidates c000 (present) and c001 (past)
    g2paug::io::write_matrix(&root.join("c000.alnf"), 3, 3, &[403.3f32; 9]).unwrap();
    g2paug::io::write_matrix(&root.join("c001.alnf"), 3, 3, &[452.9f32; 9]).unwrap();
    fs::write(
        root.join("manifest.jsonl"),
        r#"{"id":"s1","text":"read","candidates":{"c000":"c000.alnf","c001":"c001.alnf"}}"#,
    )
    .unwrap();
    let out = Command::new(bin())
        .arg("disambiguate")
        .arg("--lexicon")
        .arg(root.join("lexicon.txt"))
        .arg("--inventory")
        .arg(root.join("inventory.tsv"))
        .arg("--manifest")
        .arg(root.join("manifest.jsonl"))
        .arg("--out")
        .arg(root.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = fs::read_to_string(root.join("out/results.jsonl")).unwrap();
    let parsed: g2paug::DisambiguationResult =
        serde_json::from_str(results.lines().next().unwrap()).unwrap();
    assert_eq!(parsed.slots[0].chosen_form, "read_present");
    assert!((parsed.slots[0].confidence - 0.116).abs() < 5e-4);
}
