//! End-to-end tests of the `enhg` binary: reproducibility, exit codes, and
//! the result-file contracts.

use std::path::Path;
use std::process::{Command, Output};

fn enhg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enhg"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = enhg().args(args).current_dir(dir).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// results.json with the wall-time field blanked, for byte comparison.
fn results_without_wall_time(dir: &Path) -> String {
    let mut v: serde_json::Value =
        serde_json::from_slice(&read(dir, "results.json")).expect("valid results.json");
    v.as_object_mut().unwrap().remove("wall_time_ms");
    serde_json::to_string_pretty(&v).unwrap()
}

const SYNTH: &str = "blobs:k=3,d=12,n_per=10,sep=2.0,noise=0.2";

#[test]
fn criterion_9_runs_are_byte_identical_across_thread_counts() {
    // identical command in three separate working directories, under
    // different thread caps
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "cluster", "--synth", SYNTH, "--k", "3", "--seed", "7", "--out", "run",
    ];
    for (parent, threads) in [("a", "1"), ("b", "4"), ("c", "2")] {
        let cwd = tmp.path().join(parent);
        std::fs::create_dir_all(&cwd).unwrap();
        let out = enhg()
            .args(args)
            .env("ENHG_THREADS", threads)
            .current_dir(&cwd)
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = tmp.path().join("a/run");
    for other in ["b/run", "c/run"] {
        let o = tmp.path().join(other);
        for file in ["assignments.csv", "embedding.csv", "hypergraph.json", "Z.csv", "S.csv", "labels.csv"] {
            assert_eq!(
                read(&a, file),
                read(&o, file),
                "{file} differs between thread counts"
            );
        }
        assert_eq!(
            results_without_wall_time(&a),
            results_without_wall_time(&o),
            "results.json differs beyond wall time"
        );
    }
    println!("criterion 9 (byte-identical runs across ENHG_THREADS=1/2/4): PASS");
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    // no input source
    let out = enhg()
        .args(["cluster", "--k", "3"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("input"));

    // two input sources
    let out = enhg()
        .args(["cluster", "--k", "3", "--synth", SYNTH, "--input", "x.csv"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // missing k
    let out = enhg()
        .args(["cluster", "--synth", SYNTH])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k"));

    // bad threshold rule
    let out = enhg()
        .args(["cluster", "--synth", SYNTH, "--k", "3", "--threshold-rule", "median"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshold_rule"));

    // l1 without l2
    let out = enhg()
        .args(["cluster", "--synth", SYNTH, "--k", "3", "--l1", "0.1"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_errors_exit_1_with_module_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = enhg()
        .args(["cluster", "--input", "missing.csv", "--k", "3"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    // ragged CSV carries the row position in the diagnostic
    std::fs::write(tmp.path().join("bad.csv"), "1,2\n3\n").unwrap();
    let out = enhg()
        .args(["cluster", "--input", "bad.csv", "--k", "3"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:2"));
}

#[test]
fn classify_echoes_given_labels_and_scores_the_rest() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "classify", "--synth", SYNTH, "--label-fraction", "0.3", "--seed", "7", "--out", "cls",
        ],
        tmp.path(),
    );
    let dir = tmp.path().join("cls");
    let predictions = String::from_utf8(read(&dir, "predictions.csv")).unwrap();
    let mut given = 0;
    let mut predicted = 0;
    for line in predictions.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3);
        match fields[2] {
            "given" => given += 1,
            "predicted" => predicted += 1,
            other => panic!("unexpected source {other}"),
        }
    }
    assert_eq!(given + predicted, 30);
    // 30 samples, 3 classes, 30% stratified = 3 per class
    assert_eq!(given, 9);
    let results: serde_json::Value =
        serde_json::from_slice(&read(&dir, "results.json")).unwrap();
    assert!(results["metrics"]["classification_accuracy"].as_f64().unwrap() >= 0.9);
}

#[test]
fn eval_round_trip_appends_to_the_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(
        &["cluster", "--synth", SYNTH, "--k", "3", "--seed", "5", "--out", "c"],
        tmp.path(),
    );
    let out = run_ok(
        &[
            "eval",
            "--pred",
            "c/assignments.csv",
            "--truth",
            "c/labels.csv",
            "--out",
            "e",
            "--seed",
            "5",
        ],
        tmp.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let first: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(first["metric"], "ac");
    assert_eq!(first["n"], 30);
    // run twice: ledger keeps appending under a single header
    run_ok(
        &["eval", "--pred", "c/assignments.csv", "--truth", "c/labels.csv", "--out", "e"],
        tmp.path(),
    );
    let ledger = String::from_utf8(read(&tmp.path().join("e"), "results.csv")).unwrap();
    let lines: Vec<&str> = ledger.lines().collect();
    assert_eq!(lines[0], "metric,value,n,seed");
    assert_eq!(lines.len(), 5);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.json"),
        format!(r#"{{"synth": "{SYNTH}", "k": 3, "seed": 3, "out": "from-file"}}"#),
    )
    .unwrap();
    run_ok(
        &["cluster", "--config", "run.json", "--seed", "7", "--out", "flags-win"],
        tmp.path(),
    );
    let results: serde_json::Value =
        serde_json::from_slice(&read(&tmp.path().join("flags-win"), "results.json")).unwrap();
    assert_eq!(results["seed"], 7);
    assert!(!tmp.path().join("from-file").exists());

    // unknown config keys are rejected
    std::fs::write(tmp.path().join("bad.json"), r#"{"synt": "blobs"}"#).unwrap();
    let out = enhg()
        .args(["cluster", "--config", "bad.json", "--k", "3"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_path_emits_knot_rows() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(
        &["export-path", "--synth", SYNTH, "--column", "4", "--out", "p"],
        tmp.path(),
    );
    let text = String::from_utf8(read(&tmp.path().join("p"), "path.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("knot_index,s,atom_index,coefficient"));
    assert!(text.lines().count() > 3);
    // s stays within [0, 1]
    for line in text.lines().skip(1) {
        let s: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&s));
    }
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "sweep", "--param", "gamma", "--grid", "1:20:log", "--points", "4", "--synth", SYNTH,
            "--k", "3", "--seed", "7", "--out", "w",
        ],
        tmp.path(),
    );
    let text = String::from_utf8(read(&tmp.path().join("w"), "sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,value,ac,nmi,n,seed");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("gamma,1,"));
}

#[test]
fn baseline_flag_swaps_only_the_graph_stage() {
    let tmp = tempfile::tempdir().unwrap();
    for baseline in ["gauss", "knn8"] {
        run_ok(
            &[
                "cluster", "--synth", SYNTH, "--k", "3", "--seed", "7", "--baseline", baseline,
                "--out", baseline,
            ],
            tmp.path(),
        );
        let dir = tmp.path().join(baseline);
        assert!(dir.join("assignments.csv").exists());
        assert!(dir.join("hypergraph.json").exists());
        // no coefficient stage for the baselines
        assert!(!dir.join("Z.csv").exists());
        let results: serde_json::Value =
            serde_json::from_slice(&read(&dir, "results.json")).unwrap();
        assert!(results["metrics"]["ac"].as_f64().unwrap() > 0.9);
    }
}

#[test]
fn invalid_thread_cap_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = enhg()
        .args(["cluster", "--synth", SYNTH, "--k", "3"])
        .env("ENHG_THREADS", "many")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ENHG_THREADS"));
}
