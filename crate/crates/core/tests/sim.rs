use std::path::PathBuf;

use pvo_core::planner::Method;
use pvo_core::sim::{consistency_report, run_scenario, run_scenario_with, summarize, RunMeta, ScenarioConfig, Termination};
use pvo_core::Error;

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    ScenarioConfig::load(path).unwrap()
}

#[test]
fn shipped_scenarios_load() {
    for name in ["straight_line", "head_on", "head_on_bimodal", "two_obstacle", "three_obstacle", "four_obstacle"] {
        let cfg = scenario(name);
        assert_eq!(cfg.name, name);
    }
}

#[test]
fn obstacle_free_run_arrives_on_schedule() {
    let cfg = scenario("straight_line");
    let log = run_scenario(&cfg).unwrap();
    let s = &log.summary;
    assert_eq!(s.termination, Termination::GoalReached);
    assert!(!s.collision);
    let start = &cfg.robot.initial_state;
    let dist = (cfg.robot.goal[0] - start[0]).hypot(cfg.robot.goal[1] - start[2]);
    let expected = (dist - cfg.goal_radius) / cfg.robot.desired_speed;
    let ttg = s.time_to_goal.unwrap();
    assert!((ttg - expected).abs() <= cfg.dt + 1e-9, "time to goal {ttg} vs {expected}");
}

#[test]
fn summary_is_recomputable_from_records() {
    let log = run_scenario(&scenario("two_obstacle")).unwrap();
    let s = &log.summary;
    assert_eq!(s.steps, log.records.len());
    let control: f64 = log.records.iter().map(|r| r.control_cost).fold(0.0, |a, b| a + b);
    let tracking: f64 = log.records.iter().map(|r| r.tracking_cost).fold(0.0, |a, b| a + b);
    assert_eq!(s.control_cost_sum, control);
    assert_eq!(s.tracking_cost_sum, tracking);
    assert_eq!(s.control_l2, control.sqrt());
    let collided = log.records.iter().any(|r| r.min_clearance < 0.0);
    assert_eq!(s.collision, collided);
    let meta = RunMeta {
        scenario: s.scenario.clone(),
        method: s.method.clone(),
        degree: s.degree,
        rho: s.rho,
        eta: s.eta,
        seed: s.seed,
        termination: s.termination,
        failure: s.failure.clone(),
        time_to_goal: s.time_to_goal,
    };
    assert_eq!(&summarize(&log.records, meta), s);
}

#[test]
fn csv_has_one_row_per_step_and_a_fixed_width() {
    let log = run_scenario(&scenario("three_obstacle")).unwrap();
    let text = log.to_csv_string();
    let mut lines = text.lines();
    let width = lines.next().unwrap().split(',').count();
    // 8 leading, 4 per obstacle, 3 middle, 1 per obstacle, 9 trailing
    assert_eq!(width, 8 + 4 * 3 + 3 + 3 + 9);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), log.records.len());
    assert!(rows.iter().all(|r| r.split(',').count() == width));
}

#[test]
fn different_seeds_give_different_runs() {
    let mut cfg = scenario("head_on");
    let a = run_scenario(&cfg).unwrap();
    cfg.seed += 1;
    let b = run_scenario(&cfg).unwrap();
    assert_ne!(a.records, b.records);
}

#[test]
fn single_precision_run_completes() {
    let mut cfg = scenario("head_on");
    cfg.planner.method = Method::Deterministic;
    let log = run_scenario_with::<f32>(&cfg).unwrap();
    assert!(!log.records.is_empty());
    assert!(log.records.iter().all(|r| r.mean_state.iter().all(|v| v.is_finite())));
}

#[test]
fn planner_failures_become_terminal_records() {
    let mut cfg = scenario("head_on");
    // a box too small to dodge anything
    cfg.planner.grid.ax = 0.05;
    cfg.planner.grid.ay = 0.05;
    cfg.sensing_range = f64::INFINITY;
    let log = run_scenario(&cfg).unwrap();
    assert_eq!(log.summary.termination, Termination::DesiredInfeasible);
    assert!(log.summary.failure.is_some());
}

#[test]
fn consistency_report_shape_and_exact_limit() {
    let cfg = scenario("head_on");
    let l = cfg.samples.l;
    let rows = consistency_report(&cfg, &[5, 10, l], &[1, 2], &[0, 1, 2]).unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows.iter().filter(|r| r.n == l) {
        assert!(r.mean_error <= 1e-12, "{}", r.mean_error);
    }
    for d in [1, 2] {
        let at = |n| rows.iter().find(|r| r.degree == d && r.n == n).unwrap().mean_error;
        assert!(at(10) < at(5));
    }
    assert!(matches!(consistency_report(&cfg, &[l + 1], &[1], &[0]), Err(Error::Config { .. })));
}

#[test]
fn bad_configs_name_the_field() {
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/head_on.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["samples"]["n_r"] = 500.into();
    match ScenarioConfig::from_json(&v.to_string()) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "samples.n_r"),
        other => panic!("expected a config error, got {other:?}"),
    }
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["planner"]["bogus"] = 1.into();
    let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("bogus"), "{err}");
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["obstacles"][0]["radius"] = (-1.0).into();
    match ScenarioConfig::from_json(&v.to_string()) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "obstacles[0].radius"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_round_trips_through_json() {
    let cfg = scenario("three_obstacle");
    assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}
