use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use homcluster_cli::KRange;

fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homcluster"))
        .current_dir(cwd)
        .args(args)
        .output()
        .unwrap()
}

fn ok(cwd: &Path, args: &[&str]) {
    let out = run(cwd, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn small_pipeline(cwd: &Path) {
    ok(cwd, &["synth", "--n", "600", "--seed", "2", "--inject-outlier", "--output-dir", "synth"]);
    let data = ["--input", "synth/data.csv", "--schema", "synth/schema.json"];
    ok(cwd, &[&["fit"][..], &data, &["--output-dir", "fit"]].concat());
    ok(cwd, &[&["embed"][..], &data, &["--solution", "fit/solution.json", "--output-dir", "embed"]].concat());
}

#[test]
fn k_range_parses_and_displays() {
    let r: KRange = "2:6".parse().unwrap();
    assert_eq!(r.values(), vec![2, 3, 4, 5, 6]);
    assert_eq!(r.to_string(), "2:6");
    assert_eq!(" 3 : 3 ".parse::<KRange>().unwrap().values(), vec![3]);
    for bad in ["6:2", "0:3", "3", "a:4", "2:"] {
        assert!(bad.parse::<KRange>().is_err(), "{bad}");
    }
}

#[test]
fn usage_errors_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["sweep", "--input", "x.csv", "--k-range", "5:2", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[Usage]: "), "{err}");

    let out = run(dir.path(), &["cluster", "--k", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[Usage]: "));
}

#[test]
fn runtime_errors_exit_one_with_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["cluster", "--input", "missing.csv", "--k", "3", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[Io]: "), "{err}");

    small_pipeline(dir.path());
    let out = run(dir.path(), &["sweep", "--input", "embed/embedded.csv", "--index", "ari", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[InvalidConfig]: "), "{}", stderr(&out));
}

#[test]
fn missing_target_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    let out = run(
        dir.path(),
        &["profile", "--input", "synth/data.csv", "--schema", "synth/schema.json", "--labels", "synth/truth.csv",
            "--output-dir", "p"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[Usage]: "));
}

#[test]
fn manifest_lists_existing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    ok(dir.path(), &["cluster", "--input", "embed/embedded.csv", "--algorithm", "clara", "--k", "3", "--output-dir", "c"]);
    for stage in ["synth", "fit", "embed", "c"] {
        let root = dir.path().join(stage);
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
        let outputs = m["outputs"].as_array().unwrap();
        assert!(!outputs.is_empty());
        for o in outputs {
            assert!(root.join(o.as_str().unwrap()).is_file(), "{stage}: {o}");
        }
        assert!(m["duration_seconds"].is_null());
    }
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "cluster");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["inputs"]["input"], "embed/embedded.csv");
    let run_meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c/run.json")).unwrap()).unwrap();
    assert_eq!(run_meta["medoid_row_ids"].as_array().unwrap().len(), 3);
}

#[test]
fn timing_flag_records_duration() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--n", "50", "--timing", "--output-dir", "s"]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s/manifest.json")).unwrap()).unwrap();
    assert!(m["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    let sweep = |threads: &str, out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_homcluster"))
            .current_dir(dir.path())
            .env("HOMCLUSTER_THREADS", threads)
            .args(["sweep", "--input", "embed/embedded.csv", "--k-range", "2:4", "--output-dir", out])
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(dir.path().join(out).join("report.json")).unwrap()
    };
    assert_eq!(sweep("1", "one"), sweep("4", "four"));
    let out = Command::new(env!("CARGO_BIN_EXE_homcluster"))
        .current_dir(dir.path())
        .env("HOMCLUSTER_THREADS", "zero")
        .args(["synth", "--n", "10", "--output-dir", "t"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn drilldown_writes_a_node_per_partition() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    ok(dir.path(), &["cluster", "--input", "embed/embedded.csv", "--k", "3", "--output-dir", "c"]);
    ok(
        dir.path(),
        &["drilldown", "--input", "synth/data.csv", "--schema", "synth/schema.json", "--target", "y", "--labels",
            "c/labels.csv", "--k", "2", "--min-rows", "100", "--output-dir", "d"],
    );
    let root = dir.path().join("d");
    assert!(root.join("profile.json").is_file());
    for c in 0..3 {
        let node: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(root.join(format!("cluster_{c}/node.json"))).unwrap()).unwrap();
        assert_eq!(node["cluster"], c);
        assert_eq!(node["reclustered"], node["rows"].as_u64().unwrap() >= 100);
        if node["reclustered"] == true {
            assert_eq!(node["k"], 2);
            assert!(root.join(format!("cluster_{c}/labels.csv")).is_file());
        }
    }
}
