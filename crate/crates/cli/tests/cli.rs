use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn pvo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvo")).args(args).env("PVO_THREADS", "1").output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn strip_last_column(text: &str) -> String {
    text.lines().map(|l| l.rsplit_once(',').unwrap().0).collect::<Vec<_>>().join("\n")
}

#[test]
fn run_writes_outputs_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("head_on.json");
    let mut csvs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = pvo(&["run", "--scenario", path_str(&scenario), "--seed", "3", "--out", path_str(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(summary["seed"], 3);
        assert!(out.join("head_on_rkhs_s3.json").exists());
        csvs.push(std::fs::read_to_string(out.join("head_on_rkhs_s3.csv")).unwrap());
    }
    assert_eq!(strip_last_column(&csvs[0]), strip_last_column(&csvs[1]));
}

#[test]
fn overrides_reach_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("straight_line.json");
    let o = pvo(&[
        "run", "--scenario", path_str(&scenario), "--method", "ev_gauss", "--degree", "3", "--rho", "2.5", "--eta", "0.7",
        "--out", path_str(dir.path()),
    ]);
    assert!(o.status.success());
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["method"], "ev_gauss");
    assert_eq!(s["degree"], 3);
    assert_eq!(s["rho"], 2.5);
    assert_eq!(s["eta"], 0.7);
    assert_eq!(s["termination"], "goal_reached");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dt": -1}"#).unwrap();
    let o = pvo(&["run", "--scenario", path_str(&bad), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let scenario = scenarios().join("straight_line.json");
    let o = pvo(&["run", "--scenario", path_str(&scenario), "--method", "nope", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = pvo(&["run", "--scenario", path_str(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn infeasible_runs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("head_on.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["planner"]["grid"]["ax"] = 0.05.into();
    v["planner"]["grid"]["ay"] = 0.05.into();
    v["sensing_range"] = serde_json::Value::Null;
    let path = dir.path().join("boxed.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let o = pvo(&["run", "--scenario", path_str(&path), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["termination"], "desired_infeasible");
}

#[test]
fn compare_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = scenarios().join("straight_line.json");
    let b = scenarios().join("head_on.json");
    let o = pvo(&[
        "compare", "--scenario", path_str(&a), path_str(&b), "--method", "rkhs,deterministic", "--degree", "1,2",
        "--seeds", "2", "--out", path_str(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("scenario,method,degree"));
    assert_eq!(lines.count(), 2 * 2 * 2 * 2);
}

#[test]
fn consistency_and_timing_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenarios().join("head_on.json");
    let o = pvo(&["consistency", "--scenario", path_str(&s), "--n", "5,40", "--degree", "1,3", "--seeds", "2", "--out", path_str(dir.path())]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("consistency.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    let f = scenarios().join("four_obstacle.json");
    let o = pvo(&["timing", "--scenario", path_str(&f), "--method", "rkhs", "--obstacles", "1,2", "--repeats", "2", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("timing.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2);
}
