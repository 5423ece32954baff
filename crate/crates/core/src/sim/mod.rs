//! Scenario simulation, validation metrics, and batch studies.

mod bench;
mod config;
mod log;
mod run;

pub use bench::{
    benchmark_timing, compare, consistency_report, write_rows, CompareRow, ConsistencyRow, TimingRow,
};
pub use config::{waypoint_state, ObstacleConfig, RobotConfig, SampleConfig, ScenarioConfig};
pub use log::{csv_header, strip_wall_clock, summarize, RunMeta, RunSummary, StepRecord, Termination, TrajectoryLog};
pub use run::{
    active_obstacles, draw_step_samples, estimate_eta, plan_step, run_scenario, run_scenario_with, StepPlan,
    StepSamples,
};
