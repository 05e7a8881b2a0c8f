// SPDX-License-Identifier: Apache-2.0
//! The command-line driver, run as a subprocess with small configurations.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_circuit-ddpm");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A configuration small enough to train in well under a second.
fn fast_config(dir: &Path) -> String {
    let path = dir.join("fast.json");
    std::fs::write(
        &path,
        r#"{"n_real": 120, "n_synthetic": 40, "schedule": {"steps": 20},
            "denoiser": {"max_epochs": 3, "base_width": 32},
            "gbr": {"n_trees": 10}}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_data_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["gen-data", "--circuit", "not", "--n", "500", "--seed", "7", "--out", p(out)]);
    }
    let first = std::fs::read(a.join("data.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("data.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 17);
    let manifest = std::fs::read_to_string(a.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"data.csv\"") && manifest.contains("\"data_seed\": 7"));
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen-data", "--circuit", "not", "--n", "0", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["gen-data", "--circuit", "nand9", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    let out = run(&["train", "--data", p(&bad), "--out-model", p(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header"));
    let out = run(&["sweep", "--grid", "depth=1,2", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n_real": 5}"#).unwrap();
    let out = run(&["bench", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_sample_eval_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    let out = dir.path().join("run");
    ok(&["gen-data", "--config", &cfg, "--circuit", "not", "--n", "200", "--out", p(&out)]);
    let model = out.join("model.json");
    let data = out.join("data.csv");
    ok(&["train", "--config", &cfg, "--data", p(&data), "--out-model", p(&model)]);
    let ckpt: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(ckpt["hidden_widths"].as_array().unwrap().len(), 5);

    ok(&["sample", "--model", p(&model), "--n", "25", "--seed", "3", "--sampler", "paper", "--out", p(&out)]);
    let samples = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 26);

    ok(&["eval", "--config", &cfg, "--model", p(&model), "--out", p(&out)]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("eval.json")).unwrap()).unwrap();
    assert_eq!(report["mape"].as_array().unwrap().len(), 2);
    assert_eq!(report["ks"].as_array().unwrap().len(), 17);
    let hist = std::fs::read_to_string(out.join("histograms.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 17 * 30);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for f in ["data.csv", "model.json", "train_report.json", "samples.csv", "eval.json", "histograms.csv"] {
        assert_eq!(manifest["artifacts"][f]["sha256"].as_str().unwrap().len(), 64, "{f}");
    }
}

#[test]
fn wide_circuits_get_six_layers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    ok(&["gen-data", "--circuit", "full_adder", "--n", "100", "--out", p(dir.path())]);
    let model = dir.path().join("fa.json");
    ok(&["train", "--config", &cfg, "--data", p(&dir.path().join("data.csv")), "--out-model", p(&model)]);
    let ckpt: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(ckpt["hidden_widths"].as_array().unwrap().len(), 6);
    assert_eq!(ckpt["feature_names"].as_array().unwrap().len(), 21);
}

#[test]
fn eval_of_real_data_is_calibrated() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen-data", "--circuit", "mux2", "--n", "50", "--out", p(dir.path())]);
    ok(&["eval", "--data", p(&dir.path().join("data.csv")), "--out", p(dir.path())]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    let mapes = report["mape"].as_array().unwrap();
    assert_eq!(mapes.len(), 6);
    assert!(mapes.iter().all(|m| m["value"].as_f64() == Some(0.0)));
}

#[test]
fn bench_and_sweeps_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["sweep", "--config", &cfg, "--grid", "layers=4,5,6", "--out", p(out)]);
    }
    let table = std::fs::read(a.join("sweep_layers.csv")).unwrap();
    assert_eq!(table, std::fs::read(b.join("sweep_layers.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );
    // Three points, each with two outputs plus the mean.
    assert_eq!(String::from_utf8(table).unwrap().lines().count(), 1 + 3 * 3);

    ok(&["sweep", "--config", &cfg, "--grid", "circuit=not,and_or3", "--out", p(&a)]);
    let circuit_mape = std::fs::read_to_string(a.join("circuit_mape.csv")).unwrap();
    let rows: Vec<&str> = circuit_mape.lines().collect();
    assert_eq!(rows[0], "dataset,A,B,C,D,E,F,mean");
    assert!(rows[1].starts_with("NOT gate,") && rows[1].contains(",,,,"));

    ok(&["bench", "--config", &cfg, "--out", p(&a)]);
    let csv = std::fs::read_to_string(a.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["n_test"], 24);
    assert_eq!(report["n_train"], 96);
}
