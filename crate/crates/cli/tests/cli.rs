//! End-to-end tests of the installed binary: exit codes, determinism, and
//! the shape of the emitted files.

use std::path::Path;
use std::process::{Command, Output};

use slabkin_core::fields::snapshot_from_string;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slabkin"))
}

fn small_config(extra: &str) -> String {
    format!(
        "[model]\ncollision = \"bgk\"\nepsilon = 1.0\n\n[grids]\nn_x = 16\nn_v = 16\n\n[time]\nt_final = 0.25\n{extra}"
    )
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn run_output_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &small_config("[output]\nsnapshots = [0.0, 0.25]\n"),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out_a = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap();
    let out_b = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    run_ok(&out_a);
    run_ok(&out_b);
    assert_eq!(out_a.stdout, out_b.stdout);
    for name in [
        "run.csv",
        "summary.json",
        "snapshot_0000.txt",
        "snapshot_0001.txt",
    ] {
        let bytes_a = std::fs::read(a.join(name)).unwrap();
        let bytes_b = std::fs::read(b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "file {name} differs between runs");
    }
}

#[test]
fn invalid_config_exits_2_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &small_config("[boundary]\nalpha_left = 0.6\nbeta_left = 0.5\n"),
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.join("run.csv").exists());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("alpha_left"), "stderr: {msg}");
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("nope.toml"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn snapshot_file_reproduces_the_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = small_config("[output]\nsnapshots = [0.0]\n");
    let cfg = write_config(dir.path(), &cfg_text);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);

    let resolved = slabkin::config::parse_config(&cfg_text, None).unwrap();
    let domain = resolved.domain().unwrap();
    let initial = resolved.initial().unwrap().build(&domain).unwrap();

    let text = std::fs::read_to_string(out_dir.join("snapshot_0000.txt")).unwrap();
    let (header, values) = snapshot_from_string(&text).unwrap();
    assert_eq!(header.n_x, 16);
    assert_eq!(header.n_v, 16);
    assert_eq!(header.time, 0.0);
    assert_eq!(values, initial.values());
}

#[test]
fn summary_manifest_echoes_every_resolved_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(""));
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    let config = &summary["manifest"]["config"];
    for key in [
        "collision",
        "epsilon",
        "n_x",
        "n_v",
        "v_max",
        "alpha_left",
        "beta_left",
        "alpha_right",
        "beta_right",
        "potential_preset",
        "initial_preset",
        "t_final",
        "theta",
        "records",
        "snapshot_times",
        "limit_samples",
    ] {
        assert!(!config[key].is_null(), "manifest missing {key}");
    }
    assert_eq!(summary["manifest"]["outputs"][0], "run.csv");
    assert!(summary["ledger"]["holds"].as_bool().unwrap());
}

#[test]
fn sweep_json_is_worker_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(""));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out_a = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .args(["--eps", "1.0,0.5", "--workers", "1"])
        .output()
        .unwrap();
    let out_b = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .args(["--eps", "1.0,0.5", "--workers", "4"])
        .output()
        .unwrap();
    run_ok(&out_a);
    run_ok(&out_b);
    assert_eq!(
        std::fs::read(a.join("sweep.json")).unwrap(),
        std::fs::read(b.join("sweep.json")).unwrap()
    );
    let sweep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["members"].as_array().unwrap().len(), 2);
    assert_eq!(sweep["partial"], serde_json::Value::Bool(false));
    for member in sweep["members"].as_array().unwrap() {
        let lambda = member["summary"]["rate_fit"]["lambda"].as_f64().unwrap();
        assert!(lambda > 0.0, "member rate: {lambda}");
    }
    assert!(sweep["lambda_max_over_min"].as_f64().unwrap() >= 1.0);
    assert!(a.join("run_000/run.csv").exists());
    assert!(a.join("run_001/summary.json").exists());
}

#[test]
fn empty_eps_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(""));
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(["--eps", ""])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn limit_study_emits_gap_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config("[output]\nlimit_samples = 10\n"));
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["limit", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--eps", "0.5,0.25", "--workers", "2"])
        .output()
        .unwrap();
    run_ok(&out);
    let limit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("limit.json")).unwrap())
            .unwrap();
    assert_eq!(limit["members"].as_array().unwrap().len(), 2);
    assert_eq!(limit["partial"], serde_json::Value::Bool(false));
    for member in limit["members"].as_array().unwrap() {
        assert!(member["sup_after_layer"].as_f64().unwrap().is_finite());
        assert!(member["t_layer"].as_f64().unwrap() > 0.0);
    }
    let gap_csv = std::fs::read_to_string(out_dir.join("run_000/gap.csv")).unwrap();
    assert!(gap_csv.starts_with("t,gap\n"));
    assert_eq!(gap_csv.lines().count(), 12, "header + 11 sample rows");
}

#[test]
fn verify_passes_cleanly_and_reports_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify", "--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    run_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("verification passed"));
    assert!(text.contains("PASS boundary/"));
    assert!(text.contains("PASS collision/"));
    assert!(text.contains("PASS elliptic/"));
    assert!(text.contains("PASS layer/"));
    assert!(text.contains("PASS parabolic/"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert_eq!(report["seed"], serde_json::json!(11));
}

#[test]
fn verify_is_reproducible_for_a_seed() {
    let a = bin().args(["verify", "--seed", "5"]).output().unwrap();
    let b = bin().args(["verify", "--seed", "5"]).output().unwrap();
    run_ok(&a);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn injected_fault_fails_the_boundary_suite_with_exit_4() {
    let out = bin()
        .args(["verify", "--seed", "11", "--fault", "flip-weight-sign"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL boundary/"), "stdout: {text}");
    for line in text.lines().filter(|l| l.starts_with("FAIL")) {
        assert!(line.contains("boundary/"), "unexpected failure: {line}");
    }
}

#[test]
fn unknown_fault_mode_exits_2() {
    let out = bin()
        .args(["verify", "--fault", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_subcommand_reproduces_the_run_summary_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(""));
    let out_dir = dir.path().join("out");
    run_ok(
        &bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap(),
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    let fit = &summary["rate_fit"];
    let (t0, t1) = (
        fit["window_start"].as_f64().unwrap(),
        fit["window_end"].as_f64().unwrap(),
    );

    let out = bin()
        .arg("fit")
        .arg(out_dir.join("run.csv"))
        .args(["--t0", &format!("{t0:.17e}"), "--t1", &format!("{t1:.17e}")])
        .output()
        .unwrap();
    run_ok(&out);
    let refit: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let (a, b) = (
        fit["lambda"].as_f64().unwrap(),
        refit["lambda"].as_f64().unwrap(),
    );
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
}

#[test]
fn fit_with_unknown_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(""));
    let out_dir = dir.path().join("out");
    run_ok(
        &bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap(),
    );
    let out = bin()
        .arg("fit")
        .arg(out_dir.join("run.csv"))
        .args(["--t0", "0.1", "--t1", "0.25", "--column", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
