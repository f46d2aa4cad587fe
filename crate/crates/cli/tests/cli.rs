use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_echochain");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn single_chain_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"physics": {"delta": 0.05, "sigma": 10, "epsilon": 4.1}, "chain": {"k0": 2, "eta0": 1000}}"#,
    );
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&[
        "single_chain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("single_chain PASS"));
    for f in ["trace.csv", "manifest.json", "report.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["k0"], 2);
    assert_eq!(report["passed"], true);
}

#[test]
fn failed_verdict_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"physics": {"delta": 0.05, "sigma": 10, "epsilon": 0.013},
            "stability": {"scales": [1000], "bound": 1e-9}}"#,
    );
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&["stability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL"));
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(dir.path(), r#"{"physics": {"delta": 0.5, "sigma": 10, "epsilon": 1}}"#);
    let (code, _, stderr) = run(&["single_chain", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("delta"));

    let ladder = write_config(
        dir.path(),
        r#"{"physics": {"delta": 0.05, "sigma": 10, "epsilon": 4.1}, "chain": {"eta0": [1000]}}"#,
    );
    let (code, _, stderr) = run(&["sweep", "--config", ladder.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("ladder"));

    let (code, _, _) = run(&["single_chain", "--config", "/nonexistent.json", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let (code, _, stderr) = run(&["warp", "--config", "x.json", "--out", "y"]);
    assert_ne!(code, 0);
    assert!(stderr.contains("unknown scenario"));
}

#[test]
fn threads_keep_outputs_while_seed_changes_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"physics": {"delta": 0.05, "sigma": 10, "epsilon": 0.013}, "stability": {"scales": [1000, 10000]}}"#,
    );
    let mut reports = Vec::new();
    for (threads, name) in [("1", "a"), ("3", "b")] {
        let out = dir.path().join(name);
        let (code, _, _) = run(&[
            "stability",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "42",
            "--threads",
            threads,
        ]);
        assert_eq!(code, 0);
        reports.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let other = dir.path().join("c");
    run(&["stability", "--config", cfg.to_str().unwrap(), "--out", other.to_str().unwrap(), "--seed", "43"]);
    assert_ne!(std::fs::read(other.join("report.json")).unwrap(), reports[0]);
}
