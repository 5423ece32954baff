//! Scenario files: JSON, strictly typed, validated with field paths.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::PlannerConfig;
use crate::uncertainty::NoiseModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    /// `[x, vx, y, vy]`.
    pub initial_state: [f64; 4],
    /// Belief spread around the true state, 4 dimensions.
    pub state_noise: NoiseModel,
    /// Perturbation added to the commanded acceleration, 2 dimensions.
    pub control_noise: NoiseModel,
    pub radius: f64,
    pub goal: [f64; 2],
    pub desired_speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    /// Predicted trajectory as `[t, x, y]` points with increasing `t`. The
    /// obstacle rests at the first point before it and at the last after it.
    pub waypoints: Vec<[f64; 3]>,
    /// Prediction error, 4 dimensions over `[x, vx, y, vy]`.
    pub noise: NoiseModel,
    pub radius: f64,
}

fn default_full() -> usize {
    0
}
fn default_scenarios() -> usize {
    crate::desired::DEFAULT_SCENARIOS
}
fn default_l() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    /// Samples per robot/obstacle set used by the planner.
    pub n: usize,
    /// Size of the full set the reduced set is fitted to; `0` disables
    /// reduction.
    #[serde(default = "default_full")]
    pub full_n: usize,
    #[serde(default = "default_scenarios")]
    pub n_r: usize,
    #[serde(default = "default_scenarios")]
    pub n_o: usize,
    /// Ground-truth size for consistency studies.
    #[serde(default = "default_l")]
    pub l: usize,
    /// Draw fresh noise every step. When false the step-0 draws are kept
    /// and move with the predicted means, like a particle cloud.
    #[serde(default)]
    pub redraw: bool,
}

fn default_goal_radius() -> f64 {
    0.2
}
fn default_range() -> f64 {
    f64::INFINITY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub dt: f64,
    pub horizon_steps: usize,
    #[serde(default = "default_goal_radius")]
    pub goal_radius: f64,
    /// Obstacles farther than this from the robot's mean are ignored.
    #[serde(default = "default_range", with = "range_serde")]
    pub sensing_range: f64,
    #[serde(default)]
    pub seed: u64,
    pub robot: RobotConfig,
    #[serde(default)]
    pub obstacles: Vec<ObstacleConfig>,
    pub samples: SampleConfig,
    pub planner: PlannerConfig,
}

/// JSON has no infinity; an absent or `null` range means unlimited.
mod range_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config { field, message } if field == "<file>" => {
                Error::config(path.display().to_string(), message)
            }
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        if self.horizon_steps == 0 {
            return Err(Error::config("horizon_steps", "must be at least 1"));
        }
        positive("goal_radius", self.goal_radius)?;
        if !(self.sensing_range > 0.0) {
            return Err(Error::config("sensing_range", "must be positive"));
        }
        let r = &self.robot;
        if r.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("robot.initial_state", "entries must be finite"));
        }
        if r.goal.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("robot.goal", "entries must be finite"));
        }
        r.state_noise.expect_dim(4, "robot.state_noise")?;
        r.state_noise.validate("robot.state_noise")?;
        r.control_noise.expect_dim(2, "robot.control_noise")?;
        r.control_noise.validate("robot.control_noise")?;
        positive("robot.radius", r.radius)?;
        positive("robot.desired_speed", r.desired_speed)?;
        for (j, o) in self.obstacles.iter().enumerate() {
            let field = |f: &str| format!("obstacles[{j}].{f}");
            if o.waypoints.is_empty() {
                return Err(Error::config(field("waypoints"), "need at least one waypoint"));
            }
            if o.waypoints.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::config(field("waypoints"), "entries must be finite"));
            }
            if o.waypoints.windows(2).any(|p| p[1][0] <= p[0][0]) {
                return Err(Error::config(field("waypoints"), "times must increase strictly"));
            }
            o.noise.expect_dim(4, &field("noise"))?;
            o.noise.validate(&field("noise"))?;
            positive(&field("radius"), o.radius)?;
        }
        let s = &self.samples;
        if s.n == 0 {
            return Err(Error::config("samples.n", "must be at least 1"));
        }
        if s.full_n != 0 && s.full_n < s.n {
            return Err(Error::config("samples.full_n", format!("must be 0 or at least n={}", s.n)));
        }
        if s.n_r == 0 || s.n_r > s.n {
            return Err(Error::config("samples.n_r", format!("must be in 1..={}", s.n)));
        }
        if s.n_o == 0 || s.n_o > s.n {
            return Err(Error::config("samples.n_o", format!("must be in 1..={}", s.n)));
        }
        if s.l == 0 {
            return Err(Error::config("samples.l", "must be at least 1"));
        }
        self.planner.validate()
    }

    /// Number of samples drawn per set each step.
    pub fn draw_count(&self) -> usize {
        self.samples.n.max(self.samples.full_n)
    }
}

/// Predicted obstacle state `[x, vx, y, vy]` at time `t`.
pub fn waypoint_state(waypoints: &[[f64; 3]], t: f64) -> [f64; 4] {
    let first = waypoints[0];
    let last = waypoints[waypoints.len() - 1];
    if t <= first[0] {
        return [first[1], 0.0, first[2], 0.0];
    }
    if t >= last[0] {
        return [last[1], 0.0, last[2], 0.0];
    }
    let k = waypoints.partition_point(|w| w[0] <= t) - 1;
    let (a, b) = (waypoints[k], waypoints[k + 1]);
    let span = b[0] - a[0];
    let (vx, vy) = ((b[1] - a[1]) / span, (b[2] - a[2]) / span);
    let s = t - a[0];
    [a[1] + vx * s, vx, a[2] + vy * s, vy]
}
