use std::path::Path;
use std::process::{Command, Output};

fn scma(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scma"))
        .args(args)
        .current_dir(dir)
        .env_remove("SCMA_OUT_DIR")
        .output()
        .unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = scma(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "{text}");
    for cmd in ["sweep", "train-decoder", "train-autoencoder", "export-codebook", "complexity", "bench", "constellation"] {
        assert!(text.contains(cmd), "{cmd} missing from usage");
    }
}

#[test]
fn unknown_flags_are_rejected_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = scma(dir.path(), &["complexity", "--iterations", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn runtime_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = scma(dir.path(), &["sweep", "--detector", "dl", "--checkpoint", "nope.json", "--ebn0", "4"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.json"));
    let bad_grid = scma(dir.path(), &["sweep", "--detector", "map", "--ebn0", "8:1:2"]);
    assert_eq!(bad_grid.status.code(), Some(1));
    let no_detector = scma(dir.path(), &["sweep", "--ebn0", "4"]);
    assert_eq!(no_detector.status.code(), Some(1));
    let bad_resource = scma(dir.path(), &["constellation", "--resource", "4"]);
    assert_eq!(bad_resource.status.code(), Some(1));
}

#[test]
fn out_dir_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_scma"))
        .args(["complexity"])
        .current_dir(dir.path())
        .env("SCMA_OUT_DIR", "results")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("results/complexity.csv").exists());
}

#[test]
fn map_sweep_has_monotone_ber_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = scma(dir.path(), &["sweep", "--detector", "map", "--ebn0", "0:2:16", "--max-frames", "20000", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep-map.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("ebn0_db,frames,bit_err,sym_err,ber,ser,ci95,ns_per_frame"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    for w in rows.windows(2) {
        assert!(w[1][4] <= w[0][4] + w[0][6] + w[1][6], "{:?} then {:?}", w[0], w[1]);
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep-map.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["result"]["seed"], 5);
    assert_eq!(meta["spec"]["detector"]["kind"], "map");
}

#[test]
fn config_file_drives_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.json"), scma::model::Codebook::small().to_json()).unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"codebook": "small.json", "detector": {"kind": "log-mpa", "iterations": 6},
            "ebn0_db": [4.0, 8.0], "stop": {"min_frames": 500, "max_frames": 500, "batch_frames": 250}}"#,
    )
    .unwrap();
    let out = scma(dir.path(), &["sweep", "--config", "run.json", "--name", "cfg"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("cfg.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("4,500,"));
    assert!(csv.lines().nth(2).unwrap().starts_with("8,500,"));

    std::fs::write(dir.path().join("typo.json"), r#"{"detektor": {"kind": "map"}}"#).unwrap();
    let bad = scma(dir.path(), &["sweep", "--config", "typo.json", "--ebn0", "4"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("typo.json"));
}

#[test]
fn exported_codebook_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    assert!(scma(dir.path(), &["export-codebook"]).status.success());
    let cb = scma::model::load_codebook(dir.path().join("codebook.json")).unwrap();
    assert_eq!(cb, scma::model::Codebook::reference());
}

#[test]
fn constellation_counts_superposition_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = scma(dir.path(), &["constellation", "--resource", "0", "--received-ebn0", "12", "--samples", "10"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("constellation-r0.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("codebook,")).count(), 64);
    assert_eq!(csv.lines().filter(|l| l.starts_with("received,")).count(), 10);
}
