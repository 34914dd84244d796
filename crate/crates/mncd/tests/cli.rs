//! End-to-end tests of the `mncd` binary: report schema, reproducibility,
//! flag handling, and stage-named errors with nonzero exits.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mncd::dataset::write_dataset;
use mncd::distance::load_distance_matrix;

use common::{synthetic_dataset, SyntheticSpec};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mncd"))
}

fn small_dataset(dir: &Path) -> PathBuf {
    let dataset = synthetic_dataset(&SyntheticSpec {
        classes: 2,
        per_class: 30,
        t: 4,
        c: 2,
        noise_sd: 0.2,
        class_gap: 1.0,
        seed: 3,
    });
    let path = dir.join("data.csv");
    write_dataset(&path, &dataset).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        !out.status.success(),
        "command unexpectedly succeeded\nstdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn normalized(mut value: serde_json::Value) -> String {
    value
        .as_object_mut()
        .unwrap()
        .insert("runtime_seconds".into(), serde_json::json!(0));
    serde_json::to_string(&value).unwrap()
}

#[test]
fn evaluate_report_schema_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");

    for out in [&out_a, &out_b] {
        run_ok(binary().args(["evaluate", "--data"]).arg(&data).arg("--out").arg(out));
    }

    let report = read_json(&out_a);
    for key in ["oa", "aa", "miou", "per_class_iou", "confusion", "config", "runtime_seconds"] {
        assert!(report.get(key).is_some(), "report missing `{key}`");
    }
    let config = &report["config"];
    for key in [
        "alphabet_len",
        "k",
        "compressor",
        "level",
        "distance",
        "extrema",
        "seed",
        "train_fraction",
        "min_class_size",
        "n_train",
        "n_test",
        "data_min",
        "data_max",
        "classes",
    ] {
        assert!(config.get(key).is_some(), "config missing `{key}`");
    }
    assert_eq!(config["alphabet_len"], 22);
    assert_eq!(config["k"], 2);
    assert_eq!(config["compressor"], "gzip");
    assert_eq!(config["distance"], "multiscale");
    assert_eq!(config["extrema"], "all");
    assert_eq!(config["seed"], 32);

    // Identical invocations produce identical reports, runtime aside.
    assert_eq!(normalized(report), normalized(read_json(&out_b)));
}

#[test]
fn evaluate_writes_json_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out = run_ok(binary().args(["evaluate", "--data"]).arg(&data));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout should be a JSON report");
    assert!(report["oa"].is_number());
}

#[test]
fn short_k_flag_and_whole_distance_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_path = dir.path().join("r.json");
    run_ok(
        binary()
            .args(["evaluate", "--data"])
            .arg(&data)
            .args(["-k", "1", "--distance", "whole", "--out"])
            .arg(&out_path),
    );
    let report = read_json(&out_path);
    assert_eq!(report["config"]["k"], 1);
    assert_eq!(report["config"]["distance"], "whole");
}

#[test]
fn save_distances_writes_loadable_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_path = dir.path().join("r.json");
    let matrix_path = dir.path().join("distances.bin");
    run_ok(
        binary()
            .args(["evaluate", "--data"])
            .arg(&data)
            .arg("--save-distances")
            .arg(&matrix_path)
            .arg("--out")
            .arg(&out_path),
    );
    let report = read_json(&out_path);
    let matrix = load_distance_matrix(&matrix_path).unwrap();
    assert_eq!(matrix.n_test() as u64, report["config"]["n_test"].as_u64().unwrap());
    assert_eq!(matrix.n_train() as u64, report["config"]["n_train"].as_u64().unwrap());
    assert_eq!(matrix.train_labels().len(), matrix.n_train());
}

#[test]
fn missing_data_file_names_the_load_stage() {
    let stderr = run_err(binary().args(["evaluate", "--data", "/nonexistent/data.csv"]));
    assert!(stderr.contains("stage load"), "stderr: {stderr}");
    assert!(stderr.contains("error:"), "stderr: {stderr}");
}

#[test]
fn parse_error_names_row_and_stage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "# t=2 c=1\nlabel,v1,v2\n0,0.1,0.2\n1,oops,0.4\n",
    )
    .unwrap();
    let stderr = run_err(binary().args(["evaluate", "--data"]).arg(&path).args(["--min-class-size", "0"]));
    assert!(stderr.contains("stage load"), "stderr: {stderr}");
    assert!(stderr.contains("row 2"), "stderr: {stderr}");
}

#[test]
fn manifest_dimension_conflict_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, r#"{"t": 5, "c": 2}"#).unwrap();
    let stderr = run_err(
        binary()
            .args(["evaluate", "--data"])
            .arg(&data)
            .arg("--manifest")
            .arg(&manifest),
    );
    assert!(stderr.contains("stage load"), "stderr: {stderr}");
}

#[test]
fn unknown_compressor_lists_supported_backends() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let stderr = run_err(
        binary()
            .args(["evaluate", "--data"])
            .arg(&data)
            .args(["--compressor", "lzma"]),
    );
    assert!(stderr.contains("gzip, bzip2, zstd"), "stderr: {stderr}");
}

#[test]
fn fewshot_rejects_a_single_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let stderr = run_err(
        binary()
            .args(["fewshot", "--data"])
            .arg(&data)
            .args(["--shots", "2", "--trial-seeds", "1"]),
    );
    assert!(stderr.contains("at least two seeds"), "stderr: {stderr}");
}

#[test]
fn fewshot_reports_all_three_metrics_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_path = dir.path().join("fewshot.json");
    run_ok(
        binary()
            .args(["fewshot", "--data"])
            .arg(&data)
            .args(["--shots", "3,2", "--trial-seeds", "1,2,3", "--train-fraction", "0.5", "--out"])
            .arg(&out_path),
    );
    let report = read_json(&out_path);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let shots: Vec<u64> = rows.iter().map(|r| r["shots"].as_u64().unwrap()).collect();
    assert_eq!(shots, vec![3, 2]);
    for row in rows {
        for metric in ["oa", "aa", "miou"] {
            let summary = &row[metric];
            assert!(summary["mean"].is_number(), "row missing {metric}.mean");
            assert!(summary["ci95_half_width"].is_number());
            assert_eq!(summary["per_seed"].as_array().unwrap().len(), 3);
        }
    }
    assert_eq!(report["seeds"].as_array().unwrap().len(), 3);
}

#[test]
fn alphabet_sweep_default_grid_has_eleven_rows_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_path = dir.path().join("sweep.json");
    let csv_path = dir.path().join("sweep.csv");
    run_ok(
        binary()
            .args(["sweep-alphabet", "--data"])
            .arg(&data)
            .args(["--trial-seeds", "1,2", "--subsample-fraction", "0.5", "--out"])
            .arg(&out_path)
            .arg("--csv")
            .arg(&csv_path),
    );
    let report = read_json(&out_path);
    assert_eq!(report["sweep"], "alphabet-len");
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11, "default grid is 2..52 in steps of 5");
    assert_eq!(rows[0]["parameter"], "2");
    assert_eq!(rows[10]["parameter"], "52");
    for row in rows {
        assert!(row["miou"]["mean"].is_number());
    }

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 12, "header plus one line per row");
    assert!(lines[0].starts_with("parameter,level,mean_oa"));
    assert!(lines[1].starts_with("2,"));
}

#[test]
fn alphabet_sweep_rejects_out_of_range_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let stderr = run_err(
        binary()
            .args(["sweep-alphabet", "--data"])
            .arg(&data)
            .args(["--lengths", "1", "--trial-seeds", "1,2"]),
    );
    assert!(stderr.contains("[2, 52]"), "stderr: {stderr}");
}

#[test]
fn compressor_sweep_records_backend_levels() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_path = dir.path().join("sweep.json");
    run_ok(
        binary()
            .args(["sweep-compressor", "--data"])
            .arg(&data)
            .args(["--trial-seeds", "1,2", "--subsample-fraction", "0.5", "--out"])
            .arg(&out_path),
    );
    let report = read_json(&out_path);
    assert_eq!(report["sweep"], "compressor");
    let rows = report["rows"].as_array().unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r["parameter"].as_str().unwrap()).collect();
    assert_eq!(names, vec!["gzip", "bzip2", "zstd"]);
    let levels: Vec<u64> = rows.iter().map(|r| r["level"].as_u64().unwrap()).collect();
    assert_eq!(levels, vec![9, 9, 3]);
}

#[test]
fn bz2_alias_selects_the_bzip2_backend() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_path = dir.path().join("r.json");
    run_ok(
        binary()
            .args(["evaluate", "--data"])
            .arg(&data)
            .args(["--compressor", "bz2", "--out"])
            .arg(&out_path),
    );
    let report = read_json(&out_path);
    assert_eq!(report["config"]["compressor"], "bzip2");
    assert_eq!(report["config"]["level"], 9);
}
