//! The closed-loop simulation.
//!
//! Each step the robot's belief is a cloud around its true state, each
//! obstacle's prediction is its waypoint state one step ahead plus noise,
//! and the planner picks a control from those samples. A separate noise
//! stream drives the true robot, and every obstacle's true path is its
//! predicted path shifted by one fixed draw of its prediction error.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::desired::{build_desired_multi, desired_state, mean_state, ObstacleScenarios, TrackingCost};
use crate::error::{Error, Result};
use crate::planner::{reduce_samples, select_control, stream, ControlDecision, Method, ObstacleView};
use crate::scalar::Scalar;
use crate::uncertainty::{concat_w, sample_noise, ControlInput, DoubleIntegrator, RobotState, SampleSet};
use crate::vo::{pvo_samples, ObstacleGeometry};

use super::config::{waypoint_state, ScenarioConfig};
use super::log::{summarize, RunMeta, StepRecord, Termination, TrajectoryLog};

const ROBOT_STATE: u64 = 1;
const ROBOT_CONTROL: u64 = 2;
const TRUE_CONTROL: u64 = 3;
const PLANNER: u64 = 4;
const OBSTACLE_BASE: u64 = 100;
const OBSTACLE_OFFSET: u64 = 1_000_000;

/// Weighted fraction of sample pairs outside the velocity obstacle.
pub fn estimate_eta<S: Scalar>(
    w_set: &SampleSet<S>,
    obs_set: &SampleSet<S>,
    u: ControlInput<S>,
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<S> {
    Ok(pvo_samples(w_set, obs_set, u, geom, dt)?.satisfied_fraction())
}

/// Sample sets the planner sees at one step.
pub struct StepSamples<S> {
    /// `w` samples, `draw_count` of them.
    pub w_full: SampleSet<S>,
    /// Predicted obstacle samples, `draw_count` each.
    pub obstacles_full: Vec<SampleSet<S>>,
}

fn cast_vec<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::lit(x)).collect()
}

/// Draws the step's planning samples around the true robot state.
pub fn draw_step_samples<S: Scalar>(cfg: &ScenarioConfig, step: usize, true_state: &RobotState<S>) -> Result<StepSamples<S>> {
    let count = cfg.draw_count();
    // persistent clouds reuse the step-0 draws, translated with the means
    let k = if cfg.samples.redraw { step as u64 } else { 0 };
    let xi = sample_noise::<S>(&cfg.robot.state_noise, count, stream(cfg.seed, k, ROBOT_STATE))?
        .shifted(&true_state.to_array());
    let delta = sample_noise::<S>(&cfg.robot.control_noise, count, stream(cfg.seed, k, ROBOT_CONTROL))?;
    let w_full = concat_w(&xi, &delta)?;
    let t_next = (step + 1) as f64 * cfg.dt;
    let obstacles_full = cfg
        .obstacles
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let pred = cast_vec::<S>(&waypoint_state(&o.waypoints, t_next));
            Ok(sample_noise::<S>(&o.noise, count, stream(cfg.seed, k, OBSTACLE_BASE + j as u64))?.shifted(&pred))
        })
        .collect::<Result<_>>()?;
    Ok(StepSamples { w_full, obstacles_full })
}

fn geometries<S: Scalar>(cfg: &ScenarioConfig) -> Result<Vec<ObstacleGeometry<S>>> {
    cfg.obstacles
        .iter()
        .map(|o| ObstacleGeometry::new(S::lit(cfg.robot.radius), S::lit(o.radius)))
        .collect()
}

/// An obstacle is considered when it is within sensing range of the robot
/// mean and the two are closing in on each other.
fn is_active<S: Scalar>(robot: &RobotState<S>, obs_mean: &[S], range: f64) -> bool {
    let (rx, ry) = (robot.x - obs_mean[0], robot.y - obs_mean[2]);
    let (vx, vy) = (robot.vx - obs_mean[1], robot.vy - obs_mean[3]);
    let dist = (rx * rx + ry * ry).sqrt().as_f64();
    dist <= range && rx * vx + ry * vy < S::zero()
}

/// Planning output for one step.
pub struct StepPlan<S> {
    pub decision: ControlDecision<S>,
    /// Distance per configured obstacle; zero for inactive ones.
    pub dist_costs: Vec<S>,
    pub active: Vec<usize>,
}

/// Everything between drawing samples and choosing a control: obstacle
/// selection, reduced sets, the desired distributions, and the grid search.
pub fn plan_step<S: Scalar>(
    cfg: &ScenarioConfig,
    samples: &StepSamples<S>,
    active: &[usize],
    step: usize,
) -> Result<StepPlan<S>> {
    let dt = S::lit(cfg.dt);
    let geoms = geometries::<S>(cfg)?;
    let n = cfg.samples.n;
    let reduce = cfg.planner.method == Method::Rkhs && cfg.samples.full_n > n;
    let spec = cfg.planner.kernel();
    let prepare = |full: &SampleSet<S>| -> Result<SampleSet<S>> {
        if reduce {
            reduce_samples(full, n, &spec)
        } else {
            Ok(full.head(n))
        }
    };
    let w_plan = prepare(&samples.w_full)?;
    let obs_plan: Vec<SampleSet<S>> =
        active.iter().map(|&j| prepare(&samples.obstacles_full[j])).collect::<Result<_>>()?;

    let mean = mean_state(&samples.w_full.head(n))?;
    let goal = [S::lit(cfg.robot.goal[0]), S::lit(cfg.robot.goal[1])];
    let target = desired_state(&mean, goal, S::lit(cfg.robot.desired_speed), dt);
    let cost = TrackingCost::new(mean, target, dt).with_weight(S::lit(cfg.planner.tracking_weight));

    let desired = if cfg.planner.method.uses_desired() && !active.is_empty() {
        let scen: Vec<ObstacleScenarios<'_, S>> = active
            .iter()
            .zip(&obs_plan)
            .map(|(&j, s)| ObstacleScenarios { samples: s, geometry: geoms[j] })
            .collect();
        let controls = cfg.planner.grid.controls();
        build_desired_multi(&w_plan, &scen, cfg.samples.n_r, cfg.samples.n_o, &controls, &cost, dt)?
    } else {
        Vec::new()
    };
    let views: Vec<ObstacleView<'_, S>> = active
        .iter()
        .zip(&obs_plan)
        .map(|(&j, s)| ObstacleView { samples: s, geometry: geoms[j] })
        .collect();
    let decision = select_control(
        &w_plan,
        &views,
        &desired,
        &cost,
        &cfg.planner,
        dt,
        stream(cfg.seed, step as u64, PLANNER),
    )?;
    let mut dist_costs = vec![S::zero(); cfg.obstacles.len()];
    for (&j, &d) in active.iter().zip(&decision.per_obstacle_dist) {
        dist_costs[j] = d;
    }
    Ok(StepPlan { decision, dist_costs, active: active.to_vec() })
}

/// Obstacles in range and closing, judged on sample means.
pub fn active_obstacles<S: Scalar>(cfg: &ScenarioConfig, samples: &StepSamples<S>) -> Result<Vec<usize>> {
    let robot = mean_state(&samples.w_full.head(cfg.samples.n))?;
    Ok(samples
        .obstacles_full
        .iter()
        .enumerate()
        .filter(|(_, o)| is_active(&robot, &o.head(cfg.samples.n).mean(), cfg.sensing_range))
        .map(|(j, _)| j)
        .collect())
}

fn state_f64<S: Scalar>(s: &RobotState<S>) -> [f64; 4] {
    s.to_array().map(|v| v.as_f64())
}

/// Runs the scenario in `f64`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<TrajectoryLog> {
    run_scenario_with::<f64>(cfg)
}

/// Runs the scenario with scalar type `S`. Planner failures end the run and
/// are recorded in the summary; only invalid configurations are errors.
pub fn run_scenario_with<S: Scalar>(cfg: &ScenarioConfig) -> Result<TrajectoryLog> {
    cfg.validate()?;
    let dt = S::lit(cfg.dt);
    let model = DoubleIntegrator::new(dt);
    let geoms = geometries::<S>(cfg)?;
    let n = cfg.samples.n;

    // one fixed prediction error per obstacle for the whole run
    let offsets: Vec<Vec<f64>> = cfg
        .obstacles
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream(cfg.seed, OBSTACLE_OFFSET + j as u64, 0));
            let mut v = Vec::new();
            o.noise.draw_into::<f64, _>(&mut rng, &mut v);
            v
        })
        .collect();
    let true_obstacle = |j: usize, t: f64| -> [f64; 4] {
        let p = waypoint_state(&cfg.obstacles[j].waypoints, t);
        [p[0] + offsets[j][0], p[1], p[2] + offsets[j][2], p[3]]
    };

    let mut truth = RobotState::from_slice(&cast_vec::<S>(&cfg.robot.initial_state))?;
    let mut records = Vec::new();
    let mut termination = Termination::Horizon;
    let mut failure = None;
    let mut time_to_goal = None;

    for step in 0..cfg.horizon_steps {
        let samples = draw_step_samples::<S>(cfg, step, &truth)?;
        let active = active_obstacles(cfg, &samples)?;
        let started = Instant::now();
        let plan = match plan_step(cfg, &samples, &active, step) {
            Ok(p) => p,
            Err(e @ Error::DesiredDistributionInfeasible { .. }) => {
                termination = Termination::DesiredInfeasible;
                failure = Some(e.to_string());
                break;
            }
            Err(e @ Error::NoFeasibleControl { .. }) => {
                termination = Termination::NoFeasibleControl;
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let decision_time_s = started.elapsed().as_secs_f64();
        let u = plan.decision.control;

        let w_eval = samples.w_full.head(n);
        let mut eta = S::one();
        for &j in &active {
            let e = estimate_eta(&w_eval, &samples.obstacles_full[j].head(n), u, &geoms[j], dt)?;
            eta = eta.min(e);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(stream(cfg.seed, step as u64, TRUE_CONTROL));
        let mut delta = Vec::new();
        cfg.robot.control_noise.draw_into::<S, _>(&mut rng, &mut delta);
        truth = model.step(&truth, u.ax + delta[0], u.ay + delta[1]);
        if !truth.is_finite() {
            return Err(Error::Numerical(format!("true state diverged at step {step}")));
        }

        let t_next = (step + 1) as f64 * cfg.dt;
        let true_f = state_f64(&truth);
        let min_clearance = (0..cfg.obstacles.len())
            .map(|j| {
                let o = true_obstacle(j, t_next);
                let d = ((true_f[0] - o[0]).powi(2) + (true_f[2] - o[2]).powi(2)).sqrt();
                d - cfg.robot.radius - cfg.obstacles[j].radius
            })
            .fold(f64::INFINITY, f64::min);

        let mean = mean_state(&w_eval)?;
        let d = &plan.decision;
        records.push(StepRecord {
            step,
            time: step as f64 * cfg.dt,
            control: [u.ax.as_f64(), u.ay.as_f64()],
            mean_state: state_f64(&mean),
            obstacle_means: samples
                .obstacles_full
                .iter()
                .map(|o| {
                    let m = o.head(n).mean();
                    [m[0].as_f64(), m[1].as_f64(), m[2].as_f64(), m[3].as_f64()]
                })
                .collect(),
            active_obstacles: plan.active.len(),
            tracking_cost: d.tracking_cost.as_f64(),
            control_cost: d.control_cost.as_f64(),
            dist_costs: plan.dist_costs.iter().map(|v| v.as_f64()).collect(),
            dist_cost: d.dist_cost.as_f64(),
            total_cost: d.total.as_f64(),
            empirical_eta: eta.as_f64(),
            true_state: true_f,
            min_clearance,
            decision_time_s,
        });

        let (gx, gy) = (true_f[0] - cfg.robot.goal[0], true_f[2] - cfg.robot.goal[1]);
        if (gx * gx + gy * gy).sqrt() <= cfg.goal_radius {
            termination = Termination::GoalReached;
            time_to_goal = Some(t_next);
            break;
        }
    }

    let summary = summarize(
        &records,
        RunMeta {
            scenario: cfg.name.clone(),
            method: cfg.planner.method.name().to_string(),
            degree: cfg.planner.degree,
            rho: cfg.planner.rho,
            eta: cfg.planner.eta,
            seed: cfg.seed,
            termination,
            failure,
            time_to_goal,
        },
    );
    Ok(TrajectoryLog { records, summary })
}
