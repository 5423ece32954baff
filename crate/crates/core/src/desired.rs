//! Desired constraint distributions from a small scenario program.
//!
//! A handful of robot and obstacle samples are taken as scenarios. The
//! cheapest grid control that keeps every scenario pair outside the velocity
//! obstacle becomes the nominal control, and the constraint values it
//! produces on those pairs form the desired distribution.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::uncertainty::{ControlInput, DoubleIntegrator, RobotState, SampleSet};
use crate::vo::{pvo_values_into, ConstraintSampleSet, ObstacleGeometry};

/// Default scenario counts for the robot and obstacle sets.
pub const DEFAULT_SCENARIOS: usize = 20;

/// Quadratic cost `weight·|ξ̄_next − ξ^d|² + |u|²` of the mean state, which
/// is propagated without fresh noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingCost<S> {
    pub mean_state: RobotState<S>,
    pub desired_state: RobotState<S>,
    pub weight: S,
    pub dt: S,
}

impl<S: Scalar> TrackingCost<S> {
    pub fn new(mean_state: RobotState<S>, desired_state: RobotState<S>, dt: S) -> Self {
        Self { mean_state, desired_state, weight: S::one(), dt }
    }

    pub fn with_weight(mut self, weight: S) -> Self {
        self.weight = weight;
        self
    }

    /// `(tracking, control)`, both unweighted.
    pub fn terms(&self, u: ControlInput<S>) -> (S, S) {
        let next = DoubleIntegrator::new(self.dt).step(&self.mean_state, u.ax, u.ay);
        (next.state_distance_sq(&self.desired_state), u.norm_sq())
    }

    pub fn total(&self, u: ControlInput<S>) -> S {
        let (t, c) = self.terms(u);
        self.weight * t + c
    }
}

/// Mean of the state part (first four coordinates) of a sample set.
pub fn mean_state<S: Scalar>(set: &SampleSet<S>) -> Result<RobotState<S>> {
    if set.dim() != 4 && set.dim() != 6 {
        return Err(Error::shape(format!("expected 4- or 6-dimensional samples, got {}", set.dim())));
    }
    if set.is_empty() {
        return Err(Error::shape("mean of an empty sample set"));
    }
    RobotState::from_slice(&set.mean()[..4])
}

/// Next point on a constant-speed straight line from `mean` to `goal`. The
/// speed is capped so the line ends at the goal rather than passing it.
pub fn desired_state<S: Scalar>(mean: &RobotState<S>, goal: [S; 2], speed: S, dt: S) -> RobotState<S> {
    let (dx, dy) = (goal[0] - mean.x, goal[1] - mean.y);
    let dist = (dx * dx + dy * dy).sqrt();
    if dist <= S::epsilon() {
        return RobotState::new(goal[0], S::zero(), goal[1], S::zero());
    }
    let v = speed.min(dist / dt);
    let (vx, vy) = (v * dx / dist, v * dy / dist);
    RobotState::new(mean.x + vx * dt, vx, mean.y + vy * dt, vy)
}

/// Tracking and control cost of `u` against the mean of `w_set`.
pub fn tracking_control_cost<S: Scalar>(
    w_set: &SampleSet<S>,
    u: ControlInput<S>,
    desired: &RobotState<S>,
    dt: S,
) -> Result<(S, S)> {
    Ok(TrackingCost::new(mean_state(w_set)?, *desired, dt).terms(u))
}

/// Ranking used for every grid search: total cost, then control cost, then
/// `(ax, ay)` in lexicographic order.
pub(crate) fn cost_order<S: Scalar>(a: (S, S, ControlInput<S>), b: (S, S, ControlInput<S>)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
        .then(a.2.ax.partial_cmp(&b.2.ax).unwrap_or(Ordering::Equal))
        .then(a.2.ay.partial_cmp(&b.2.ay).unwrap_or(Ordering::Equal))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesiredDistribution<S> {
    pub u_nom: ControlInput<S>,
    /// Constraint values of every scenario pair at `u_nom`; all `≤ 0`.
    pub constraint_samples: ConstraintSampleSet<S>,
    pub w_des: SampleSet<S>,
    pub obs_des: SampleSet<S>,
}

/// One obstacle's view of [`build_desired_multi`].
pub struct ObstacleScenarios<'a, S> {
    pub samples: &'a SampleSet<S>,
    pub geometry: ObstacleGeometry<S>,
}

/// Scenario program for a single obstacle.
#[allow(clippy::too_many_arguments)]
pub fn build_desired<S: Scalar>(
    w_set: &SampleSet<S>,
    obs_set: &SampleSet<S>,
    n_r: usize,
    n_o: usize,
    control_grid: &[ControlInput<S>],
    cost: &TrackingCost<S>,
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<DesiredDistribution<S>> {
    let obstacle = ObstacleScenarios { samples: obs_set, geometry: *geom };
    let mut out = build_desired_multi(w_set, &[obstacle], n_r, n_o, control_grid, cost, dt)?;
    Ok(out.pop().expect("one obstacle in, one distribution out"))
}

/// Scenario program against the union of all obstacles' scenario pairs.
/// Returns one desired distribution per obstacle, all sharing `u_nom`.
pub fn build_desired_multi<S: Scalar>(
    w_set: &SampleSet<S>,
    obstacles: &[ObstacleScenarios<'_, S>],
    n_r: usize,
    n_o: usize,
    control_grid: &[ControlInput<S>],
    cost: &TrackingCost<S>,
    dt: S,
) -> Result<Vec<DesiredDistribution<S>>> {
    w_set.expect_dim(6, "scenario robot samples")?;
    if control_grid.is_empty() {
        return Err(Error::config("planner.grid", "control grid is empty"));
    }
    if n_r == 0 || n_r > w_set.len() {
        return Err(Error::config("samples.n_r", format!("n_r={n_r} must be in 1..={}", w_set.len())));
    }
    let w_des = w_set.head(n_r);
    let mut obs_des = Vec::with_capacity(obstacles.len());
    for o in obstacles {
        o.samples.expect_dim(4, "scenario obstacle samples")?;
        if n_o == 0 || n_o > o.samples.len() {
            return Err(Error::config("samples.n_o", format!("n_o={n_o} must be in 1..={}", o.samples.len())));
        }
        obs_des.push(o.samples.head(n_o));
    }
    let model = DoubleIntegrator::new(dt);

    let feasible = |u: &ControlInput<S>| -> bool {
        let mut values = Vec::new();
        obstacles.iter().zip(&obs_des).all(|(o, od)| {
            pvo_values_into(&w_des, od, u, o.geometry.combined_sq(), &model, &mut values);
            values.iter().all(|&f| f <= S::zero())
        })
    };
    let best = control_grid
        .par_iter()
        .filter(|u| feasible(u))
        .map(|&u| {
            let (t, c) = cost.terms(u);
            (cost.weight * t + c, c, u)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| cost_order(*a, *b));
    let Some((_, _, u_nom)) = best else {
        return Err(Error::DesiredDistributionInfeasible { constraints: n_r * n_o * obstacles.len() });
    };

    let mut out = Vec::with_capacity(obstacles.len());
    for (o, od) in obstacles.iter().zip(obs_des) {
        let mut values = Vec::new();
        pvo_values_into(&w_des, &od, &u_nom, o.geometry.combined_sq(), &model, &mut values);
        out.push(DesiredDistribution {
            u_nom,
            constraint_samples: ConstraintSampleSet::uniform(values),
            w_des: w_des.clone(),
            obs_des: od,
        });
    }
    Ok(out)
}
