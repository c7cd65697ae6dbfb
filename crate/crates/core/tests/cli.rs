mod common;

use std::path::Path;
use std::process::{Command, Output};

use radiomix::eval::RunReport;
use radiomix::labels::{events_to_frames, format_annotations, frames_to_events, read_annotations, write_annotations, EXAMPLE_FRAMES, FRAME_HOP_S};
use radiomix::melf;
use radiomix::postproc::FrameProbs;

fn radiomix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiomix"))
        .args(args)
        .env("RADIOMIX_LOG", "error")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = radiomix(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn digest_without_config(dir: &Path) -> String {
    let copy = tempfile::tempdir().unwrap();
    for f in common::files_in(dir) {
        if f.file_name().unwrap() != "run_config.toml" {
            std::fs::copy(&f, copy.path().join(f.file_name().unwrap())).unwrap();
        }
    }
    common::dir_digest(copy.path())
}

fn report(path: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert!(radiomix(&["--help"]).status.success());
    assert!(radiomix(&["--version"]).status.success());
    assert!(radiomix(&["synth", "--help"]).status.success());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = radiomix(&["evaluate", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_directory_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_refs");
    let out = radiomix(&["evaluate", "--ref", p(&missing), "--pred", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("no_such_refs"), "{err}");
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[synth]\np_transition = 3.0\n").unwrap();
    let out = radiomix(&[
        "--config", p(&cfg), "synth", "--corpus", p(common::demo_corpus()), "--out", p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_deterministic_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 99\n[synth]\nvariant = \"d-OF\"\n").unwrap();
    let corpus = p(common::demo_corpus());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&[
            "--config", p(&cfg), "synth", "--corpus", corpus, "--out", p(out), "--count", "10", "--seed", "1",
            "--variant", "d-DS", "--workers", "2",
        ]);
    }
    assert_eq!(digest_without_config(&a), digest_without_config(&b));
    let echoed = std::fs::read_to_string(a.join("run_config.toml")).unwrap();
    assert!(echoed.contains("seed = 1"), "{echoed}");
    assert!(echoed.contains("variant = \"d-DS\""), "{echoed}");
    assert_eq!(common::files_in(&a).len(), 22);
}

#[test]
fn loudness_prints_two_decimals() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pink_noise_m20.wav");
    let out = ok(&["loudness", p(&fixture)]);
    let line = out.trim();
    let (_, decimals) = line.split_once('.').unwrap();
    assert_eq!(decimals.len(), 2, "{line}");
    assert!((line.parse::<f64>().unwrap() + 22.88).abs() < 0.1, "{line}");
}

#[test]
fn closed_loop_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--corpus", p(common::demo_corpus()), "--out", p(&data), "--count", "50", "--seed", "3"]);

    let feats = dir.path().join("feats");
    ok(&["featurize", "--in", p(&data), "--out", p(&feats)]);
    let melfs = common::files_in(&feats);
    assert_eq!(melfs.len(), 50);
    for f in &melfs {
        let m = melf::read(f).unwrap();
        assert_eq!((m.rows, m.cols), (EXAMPLE_FRAMES, 80));
    }

    // Perfect predictions: reference labels rendered as 0/1 frame probabilities.
    let probs_root = dir.path().join("probs");
    let pred = dir.path().join("pred");
    let direct = dir.path().join("direct");
    let shifted = dir.path().join("shifted");
    for d in [&pred, &direct, &shifted] {
        std::fs::create_dir_all(d).unwrap();
    }
    let cfg = dir.path().join("nosmooth.toml");
    std::fs::write(
        &cfg,
        "[smoothing]\nmin_speech_s = 0.001\nmin_music_s = 0.001\nmax_gap_speech_s = 0.001\nmax_gap_music_s = 0.001\n",
    )
    .unwrap();
    for i in 0..50 {
        let stem = format!("ex_{i:06}");
        let events = read_annotations(&data.join(format!("{stem}.tsv"))).unwrap();
        let frames = events_to_frames(&events, EXAMPLE_FRAMES, FRAME_HOP_S).unwrap();
        let probs = FrameProbs::new(
            frames.rows.iter().map(|r| [r[0] as u8 as f32, r[1] as u8 as f32]).collect(),
            FRAME_HOP_S,
        )
        .unwrap();
        let win_dir = probs_root.join(&stem);
        std::fs::create_dir_all(&win_dir).unwrap();
        melf::write(&win_dir.join("w0.melf"), &probs.to_matrix()).unwrap();
        let out_tsv = pred.join(format!("{stem}.tsv"));
        ok(&["--config", p(&cfg), "postprocess", "--probs", p(&win_dir), "--out", p(&out_tsv), "--frames", "802"]);
        assert_eq!(std::fs::read_to_string(&out_tsv).unwrap(), format_annotations(&frames_to_events(&frames)));

        write_annotations(&direct.join(format!("{stem}.tsv")), &events).unwrap();
        write_annotations(&shifted.join(format!("{stem}.tsv")), &events.shifted(0.1, 8.0)).unwrap();
    }

    let json = dir.path().join("self.json");
    ok(&["evaluate", "--ref", p(&data), "--pred", p(&direct), "--json", p(&json)]);
    assert_eq!(report(&json).total.overall.f, 1.0);

    ok(&["evaluate", "--ref", p(&data), "--pred", p(&pred), "--json", p(&json)]);
    let framed = report(&json).total.overall.f;
    assert!(framed > 0.99 && framed <= 1.0, "{framed}");

    ok(&["evaluate", "--ref", p(&data), "--pred", p(&shifted), "--json", p(&json), "--segment-ms", "10"]);
    assert!(report(&json).total.overall.f < 1.0);
}
