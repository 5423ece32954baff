//! Per-step records, run summaries, and their CSV/JSON forms.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub control: [f64; 2],
    /// Mean of the robot belief at decision time, `[x, vx, y, vy]`.
    pub mean_state: [f64; 4],
    /// Mean of each obstacle's predicted samples.
    pub obstacle_means: Vec<[f64; 4]>,
    pub active_obstacles: usize,
    pub tracking_cost: f64,
    pub control_cost: f64,
    pub dist_costs: Vec<f64>,
    pub dist_cost: f64,
    pub total_cost: f64,
    pub empirical_eta: f64,
    /// True robot state after applying the control.
    pub true_state: [f64; 4],
    /// Smallest true surface-to-surface distance to any obstacle.
    pub min_clearance: f64,
    pub decision_time_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GoalReached,
    Horizon,
    DesiredInfeasible,
    NoFeasibleControl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub method: String,
    pub degree: u32,
    pub rho: f64,
    pub eta: f64,
    pub seed: u64,
    pub steps: usize,
    pub termination: Termination,
    pub failure: Option<String>,
    /// `Σ |u|²` over the steps.
    pub control_cost_sum: f64,
    /// `√(Σ |u|²)`.
    pub control_l2: f64,
    pub tracking_cost_sum: f64,
    /// `control_cost_sum + tracking_cost_sum`.
    pub cost_sum: f64,
    pub time_to_goal: Option<f64>,
    pub min_empirical_eta: f64,
    pub collision: bool,
    pub min_clearance: f64,
    pub mean_decision_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
}

/// Identity and outcome of a run; the metrics are filled in by
/// [`summarize`].
pub struct RunMeta {
    pub scenario: String,
    pub method: String,
    pub degree: u32,
    pub rho: f64,
    pub eta: f64,
    pub seed: u64,
    pub termination: Termination,
    pub failure: Option<String>,
    pub time_to_goal: Option<f64>,
}

/// Summary metrics recomputed from the records, in record order.
pub fn summarize(records: &[StepRecord], meta: RunMeta) -> RunSummary {
    let control_cost_sum: f64 = records.iter().map(|r| r.control_cost).fold(0.0, |a, b| a + b);
    let tracking_cost_sum: f64 = records.iter().map(|r| r.tracking_cost).fold(0.0, |a, b| a + b);
    let decision: f64 = records.iter().map(|r| r.decision_time_s).fold(0.0, |a, b| a + b);
    let min_clearance = records.iter().map(|r| r.min_clearance).fold(f64::INFINITY, f64::min);
    RunSummary {
        scenario: meta.scenario,
        method: meta.method,
        degree: meta.degree,
        rho: meta.rho,
        eta: meta.eta,
        seed: meta.seed,
        steps: records.len(),
        termination: meta.termination,
        failure: meta.failure,
        control_cost_sum,
        control_l2: control_cost_sum.sqrt(),
        tracking_cost_sum,
        cost_sum: control_cost_sum + tracking_cost_sum,
        time_to_goal: meta.time_to_goal,
        min_empirical_eta: records.iter().map(|r| r.empirical_eta).fold(1.0, f64::min),
        collision: min_clearance < 0.0,
        min_clearance,
        mean_decision_time_s: if records.is_empty() { 0.0 } else { decision / records.len() as f64 },
    }
}

/// Column names for `obstacles` obstacles. The order is fixed; the
/// wall-clock column is always last.
pub fn csv_header(obstacles: usize) -> Vec<String> {
    let mut h: Vec<String> = ["step", "time", "ax", "ay", "mean_x", "mean_vx", "mean_y", "mean_vy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for j in 0..obstacles {
        for c in ["x", "vx", "y", "vy"] {
            h.push(format!("obs{j}_{c}"));
        }
    }
    h.extend(["active_obstacles", "tracking_cost", "control_cost"].map(String::from));
    for j in 0..obstacles {
        h.push(format!("dist{j}"));
    }
    h.extend(
        [
            "dist_cost",
            "total_cost",
            "empirical_eta",
            "true_x",
            "true_vx",
            "true_y",
            "true_vy",
            "min_clearance",
            "decision_time_s",
        ]
        .map(String::from),
    );
    h
}

fn row(r: &StepRecord) -> Vec<String> {
    let mut v = vec![r.step.to_string(), r.time.to_string()];
    v.extend(r.control.iter().map(f64::to_string));
    v.extend(r.mean_state.iter().map(f64::to_string));
    for m in &r.obstacle_means {
        v.extend(m.iter().map(f64::to_string));
    }
    v.push(r.active_obstacles.to_string());
    v.push(r.tracking_cost.to_string());
    v.push(r.control_cost.to_string());
    v.extend(r.dist_costs.iter().map(f64::to_string));
    for x in [r.dist_cost, r.total_cost, r.empirical_eta] {
        v.push(x.to_string());
    }
    v.extend(r.true_state.iter().map(f64::to_string));
    v.push(r.min_clearance.to_string());
    v.push(r.decision_time_s.to_string());
    v
}

impl TrajectoryLog {
    pub fn obstacle_count(&self) -> usize {
        self.records.first().map_or(0, |r| r.obstacle_means.len())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(csv_header(self.obstacle_count()))?;
        for r in &self.records {
            w.write_record(row(r))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.summary_json())?;
        Ok(())
    }
}

/// The CSV with the wall-clock column removed, for reproducibility checks.
pub fn strip_wall_clock(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
