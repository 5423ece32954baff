//! Batch studies: method comparisons, decision timing, and sample-size
//! consistency.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::{consistency_error, KernelSpec};
use crate::error::{Error, Result};
use crate::planner::{stream, Method};
use crate::uncertainty::{concat_w, sample_noise, ControlInput, RobotState};
use crate::vo::ObstacleGeometry;

use super::config::{waypoint_state, ScenarioConfig};
use super::log::RunSummary;
use super::run::{draw_step_samples, plan_step, run_scenario};

/// Writes serializable rows as CSV with a header.
pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// A flat, CSV-friendly view of a run summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub scenario: String,
    pub method: String,
    pub degree: u32,
    pub rho: f64,
    pub eta: f64,
    pub seed: u64,
    pub steps: usize,
    pub termination: String,
    pub collision: bool,
    pub min_clearance: f64,
    pub min_empirical_eta: f64,
    pub control_cost_sum: f64,
    pub tracking_cost_sum: f64,
    pub cost_sum: f64,
    pub control_l2: f64,
    pub time_to_goal: Option<f64>,
    pub mean_decision_time_s: f64,
}

impl From<&RunSummary> for CompareRow {
    fn from(s: &RunSummary) -> Self {
        Self {
            scenario: s.scenario.clone(),
            method: s.method.clone(),
            degree: s.degree,
            rho: s.rho,
            eta: s.eta,
            seed: s.seed,
            steps: s.steps,
            termination: serde_json::to_value(s.termination)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            collision: s.collision,
            min_clearance: s.min_clearance,
            min_empirical_eta: s.min_empirical_eta,
            control_cost_sum: s.control_cost_sum,
            tracking_cost_sum: s.tracking_cost_sum,
            cost_sum: s.cost_sum,
            control_l2: s.control_l2,
            time_to_goal: s.time_to_goal,
            mean_decision_time_s: s.mean_decision_time_s,
        }
    }
}

/// Runs every `(scenario, planner variant, seed)` combination concurrently.
/// Results come back in input order.
pub fn compare(scenarios: &[ScenarioConfig], variants: &[crate::planner::PlannerConfig], seeds: &[u64]) -> Result<Vec<RunSummary>> {
    let mut jobs = Vec::new();
    for s in scenarios {
        for v in variants {
            for &seed in seeds {
                let mut cfg = s.clone();
                cfg.planner = v.clone();
                cfg.seed = seed;
                jobs.push(cfg);
            }
        }
    }
    jobs.par_iter().map(|cfg| run_scenario(cfg).map(|log| log.summary)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub method: String,
    pub degree: u32,
    pub obstacles: usize,
    pub decisions: usize,
    pub failures: usize,
    pub mean_s: f64,
    pub std_s: f64,
}

/// Wall-clock time of complete planning decisions (reduced sets, desired
/// distribution and grid search) from the scenario's initial state, with
/// the first `k` obstacles all treated as active, for each `k` in
/// `obstacle_counts`.
pub fn benchmark_timing(
    cfg: &ScenarioConfig,
    methods: &[Method],
    obstacle_counts: &[usize],
    repeats: usize,
) -> Result<Vec<TimingRow>> {
    cfg.validate()?;
    let truth = RobotState::from_slice(&cfg.robot.initial_state)?;
    let mut rows = Vec::new();
    for &k in obstacle_counts {
        if k == 0 || k > cfg.obstacles.len() {
            return Err(Error::config("obstacles", format!("cannot time {k} of {} obstacles", cfg.obstacles.len())));
        }
        let mut c = cfg.clone();
        c.obstacles.truncate(k);
        let active: Vec<usize> = (0..k).collect();
        for &m in methods {
            c.planner.method = m;
            let mut times = Vec::with_capacity(repeats);
            let mut failures = 0;
            for rep in 0..repeats {
                let samples = draw_step_samples::<f64>(&c, rep, &truth)?;
                let started = Instant::now();
                let outcome = plan_step(&c, &samples, &active, rep);
                let elapsed = started.elapsed().as_secs_f64();
                match outcome {
                    Ok(_) => times.push(elapsed),
                    Err(Error::DesiredDistributionInfeasible { .. } | Error::NoFeasibleControl { .. }) => failures += 1,
                    Err(e) => return Err(e),
                }
            }
            let n = times.len() as f64;
            let mean = times.iter().sum::<f64>() / n;
            let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            rows.push(TimingRow {
                method: m.name().to_string(),
                degree: c.planner.degree,
                obstacles: k,
                decisions: times.len(),
                failures,
                mean_s: mean,
                std_s: var.sqrt(),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub degree: u32,
    pub seeds: usize,
    pub mean_error: f64,
    pub std_error: f64,
}

/// Seed-averaged consistency error of the constraint embedding at the
/// scenario's initial state against its first obstacle, under zero control.
pub fn consistency_report(
    cfg: &ScenarioConfig,
    n_values: &[usize],
    d_values: &[u32],
    seeds: &[u64],
) -> Result<Vec<ConsistencyRow>> {
    cfg.validate()?;
    let l = cfg.samples.l;
    if let Some(&n) = n_values.iter().find(|&&n| n == 0 || n > l) {
        return Err(Error::config("samples.l", format!("n={n} must be in 1..={l}")));
    }
    if seeds.is_empty() {
        return Err(Error::config("seeds", "need at least one seed"));
    }
    let obstacle = cfg
        .obstacles
        .first()
        .ok_or_else(|| Error::config("obstacles", "consistency study needs an obstacle"))?;
    let geom = ObstacleGeometry::new(cfg.robot.radius, obstacle.radius)?;
    let f_scale = cfg.planner.f_scale.unwrap_or(geom.combined_sq());
    let pred = waypoint_state(&obstacle.waypoints, cfg.dt);

    let sets = seeds
        .iter()
        .map(|&seed| {
            let xi = sample_noise::<f64>(&cfg.robot.state_noise, l, stream(seed, 0, 1))?
                .shifted(&cfg.robot.initial_state);
            let delta = sample_noise::<f64>(&cfg.robot.control_noise, l, stream(seed, 0, 2))?;
            let obs = sample_noise::<f64>(&obstacle.noise, l, stream(seed, 0, 3))?.shifted(&pred);
            Ok((seed, concat_w(&xi, &delta)?, obs))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for &d in d_values {
        let spec = KernelSpec::new(d)?;
        for &n in n_values {
            let errors = sets
                .par_iter()
                .map(|(seed, w, o)| {
                    consistency_error(w, o, ControlInput::zero(), n, l, &spec, &geom, cfg.dt, f_scale, stream(*seed, n as u64, 4))
                })
                .collect::<Result<Vec<f64>>>()?;
            let m = errors.len() as f64;
            let mean = errors.iter().sum::<f64>() / m;
            let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            rows.push(ConsistencyRow { n, degree: d, seeds: seeds.len(), mean_error: mean, std_error: (var / m).sqrt() });
        }
    }
    Ok(rows)
}
