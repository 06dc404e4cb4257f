use std::path::Path;
use std::process::{Command, Output};

use preme_core::pipeline::{Workspace, DEMO_ANNOTATIONS};

fn preme(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_preme"))
        .current_dir(dir)
        .env_remove("PREME_CONFIG")
        .env_remove("PREME_OUTPUT_DIR")
        .args(["--log", "warn"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn demo_then_rerun_reuses_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = preme(dir.path(), &["demo", "--output-dir", "ws"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("demo_product_meeting: Done"));
    let ws = Workspace::new(dir.path().join("ws"));
    let first = std::fs::read(ws.questionnaire_path("demo_product_meeting")).unwrap();

    let out = preme(dir.path(), &["demo", "--output-dir", "ws"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("attempt 2"), "{}", stdout(&out));
    assert_eq!(
        std::fs::read(ws.questionnaire_path("demo_product_meeting")).unwrap(),
        first
    );
}

#[test]
fn run_without_tagger_fails_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.tsv"),
        "A\tWe should fix the remote control design.\n",
    )
    .unwrap();
    let out = preme(dir.path(), &["run", "m.tsv", "--output-dir", "ws"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no tagger model"), "{err}");
    assert!(!dir.path().join("ws/meetings/m").exists());
}

#[test]
fn config_file_and_flags_merge() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("preme.toml"),
        "seed = 9\n[segmentation]\nblock_size = 4\n",
    )
    .unwrap();
    let out = preme(dir.path(), &["run", "x.json", "--threshold", "0.25", "--print-config"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("seed = 9"));
    assert!(text.contains("block_size = 4"));
    assert!(text.contains("threshold = 0.25"));

    let out = preme(
        dir.path(),
        &[
            "run",
            "x.json",
            "--generation-url",
            "http://localhost:1",
            "--print-config",
        ],
    );
    assert!(stdout(&out).contains("url = \"http://localhost:1\""));

    std::fs::write(dir.path().join("bad.toml"), "[segmentation]\nthreshold = 7\n").unwrap();
    let out = preme(dir.path(), &["run", "x.json", "--config", "bad.toml", "--print-config"]);
    assert!(!out.status.success());
}

#[test]
fn train_tagger_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.conll"), DEMO_ANNOTATIONS).unwrap();
    let out = preme(
        dir.path(),
        &[
            "train-tagger",
            "a.conll",
            "--out",
            "models/t.json",
            "--max-iterations",
            "40",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("models/t.json").is_file());

    let out = preme(dir.path(), &["evaluate", "--agreement", "a.conll", "a.conll"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["alpha_subject_hard"], 1.0);
}

#[test]
fn ingest_honours_explicit_meeting_id() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.tsv"), "A\tHello there.\nB\tHi.\n").unwrap();
    let out = preme(
        dir.path(),
        &["ingest", "t.tsv", "--meeting-id", "weekly", "--output-dir", "ws"],
    );
    assert!(out.status.success());
    let t = Workspace::new(dir.path().join("ws")).load_transcript("weekly").unwrap();
    assert_eq!(t.turns.len(), 2);
}
