//! One-step robust control selection over a grid of candidate controls.
//!
//! Every candidate is scored by the tracking/control cost plus `rho` times a
//! distance between its constraint distribution and the desired one
//! ([`Method::Rkhs`], [`Method::GmmKld`]), or filtered by a hard surrogate
//! of the chance constraint (the Gaussian baselines and the mean-only one).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::desired::{cost_order, DesiredDistribution, TrackingCost};
use crate::embedding::{mmd_squared, reduced_set_weights, KernelSpec, PolyMoments};
use crate::error::{Error, Result};
use crate::gmm::{fit_gmm, kl_divergence, GmmModel};
use crate::scalar::Scalar;
use crate::uncertainty::{ControlInput, DoubleIntegrator, SampleSet};
use crate::vo::{f_value, pair_weights, pvo_values_into, ConstraintSampleSet, ObstacleGeometry};

/// Finite-difference step of the linearized baseline.
pub const FD_STEP: f64 = 1e-5;
/// Ridge added to the joint covariance of the linearized baseline.
pub const COVARIANCE_RIDGE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rkhs,
    GmmKld,
    LinearizedGaussian,
    EvGauss,
    Deterministic,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Rkhs, Method::GmmKld, Method::LinearizedGaussian, Method::EvGauss, Method::Deterministic];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rkhs => "rkhs",
            Method::GmmKld => "gmm_kld",
            Method::LinearizedGaussian => "linearized_gaussian",
            Method::EvGauss => "ev_gauss",
            Method::Deterministic => "deterministic",
        }
    }

    /// Methods that need a desired distribution each step.
    pub fn uses_desired(self) -> bool {
        matches!(self, Method::Rkhs | Method::GmmKld)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("planner.method", format!("unknown method `{s}`")))
    }
}

/// How the rkhs distance is evaluated. Both give the same value; `Moments`
/// is linear in the sample count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmdRoute {
    #[default]
    Moments,
    Gram,
}

/// Lattice over the box `[-ax, ax] × [-ay, ay]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlGrid {
    pub ax: f64,
    pub ay: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for ControlGrid {
    fn default() -> Self {
        Self { ax: 3.0, ay: 3.0, nx: 7, ny: 7 }
    }
}

fn linspace(bound: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| -bound + 2.0 * bound * i as f64 / (n - 1) as f64).collect()
}

impl ControlGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.ax >= 0.0 && self.ay >= 0.0 && self.ax.is_finite() && self.ay.is_finite()) {
            return Err(Error::config("planner.grid", "acceleration bounds must be finite and nonnegative"));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::config("planner.grid", "grid resolution must be at least 1 per axis"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Controls in lexicographic `(ax, ay)` order.
    pub fn controls<S: Scalar>(&self) -> Vec<ControlInput<S>> {
        let ys = linspace(self.ay, self.ny);
        linspace(self.ax, self.nx)
            .into_iter()
            .flat_map(|x| ys.iter().map(move |&y| ControlInput::new(S::lit(x), S::lit(y))))
            .collect()
    }

    pub fn contains<S: Scalar>(&self, u: &ControlInput<S>) -> bool {
        u.ax.as_f64().abs() <= self.ax + 1e-12 && u.ay.as_f64().abs() <= self.ay + 1e-12
    }
}

fn default_rho() -> f64 {
    1.0
}
fn default_degree() -> u32 {
    2
}
fn default_components() -> usize {
    3
}
fn default_mc() -> usize {
    1000
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}
fn default_eta() -> f64 {
    0.9
}
fn default_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub method: Method,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default = "default_components")]
    pub gmm_components: usize,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default = "default_max_iter")]
    pub gmm_max_iter: usize,
    #[serde(default = "default_tol")]
    pub gmm_tol: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub grid: ControlGrid,
    /// Weight on the tracking term of the cost.
    #[serde(default = "default_weight")]
    pub tracking_weight: f64,
    #[serde(default)]
    pub mmd_route: MmdRoute,
    /// Divisor applied to constraint values before embedding or mixture
    /// fitting. Defaults to `(R + R_o)²` per obstacle.
    #[serde(default)]
    pub f_scale: Option<f64>,
}

impl PlannerConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            rho: default_rho(),
            degree: default_degree(),
            gmm_components: default_components(),
            mc_samples: default_mc(),
            gmm_max_iter: default_max_iter(),
            gmm_tol: default_tol(),
            eta: default_eta(),
            grid: ControlGrid::default(),
            tracking_weight: default_weight(),
            mmd_route: MmdRoute::default(),
            f_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::config("planner.rho", "rho must be finite and nonnegative"));
        }
        KernelSpec::new(self.degree).map_err(|_| Error::config("planner.degree", "degree must be at least 1"))?;
        if self.gmm_components == 0 {
            return Err(Error::config("planner.gmm_components", "need at least one component"));
        }
        if self.mc_samples == 0 {
            return Err(Error::config("planner.mc_samples", "need at least one Monte-Carlo draw"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::config("planner.eta", "eta must lie strictly between 0 and 1"));
        }
        if !(self.tracking_weight > 0.0 && self.tracking_weight.is_finite()) {
            return Err(Error::config("planner.tracking_weight", "tracking weight must be positive"));
        }
        if let Some(s) = self.f_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("planner.f_scale", "f_scale must be positive"));
            }
        }
        self.grid.validate()
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::new(self.degree).expect("validated degree")
    }

    pub fn f_scale_for<S: Scalar>(&self, geom: &ObstacleGeometry<S>) -> S {
        self.f_scale.map(S::lit).unwrap_or_else(|| geom.combined_sq())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlDecision<S> {
    pub control: ControlInput<S>,
    pub tracking_cost: S,
    pub control_cost: S,
    pub dist_cost: S,
    /// `tracking_weight·tracking_cost + control_cost + rho·dist_cost`.
    pub total: S,
    pub per_obstacle_dist: Vec<S>,
}

/// An obstacle as seen by the planner: its predicted samples and geometry.
#[derive(Clone, Copy)]
pub struct ObstacleView<'a, S> {
    pub samples: &'a SampleSet<S>,
    pub geometry: ObstacleGeometry<S>,
}

/// `ε = √(η / (1 − η))`, the tightest one-sided Chebyshev factor for `η`.
pub fn cantelli_epsilon(eta: f64) -> f64 {
    (eta / (1.0 - eta)).sqrt()
}

/// `E[f] + ε·√Var[f] ≤ 0` with weighted sample moments.
pub fn ev_gauss_feasible<S: Scalar>(f_samples: &ConstraintSampleSet<S>, eta: f64) -> bool {
    let eps = S::lit(cantelli_epsilon(eta));
    f_samples.mean() + eps * f_samples.variance().max(S::zero()).sqrt() <= S::zero()
}

/// Gaussian surrogate from linearizing `f` at the joint sample mean.
/// Returns `(mean, std)` of the linearized constraint.
pub fn linearized_gaussian_moments<S: Scalar>(
    w_set: &SampleSet<S>,
    obs_set: &SampleSet<S>,
    u: ControlInput<S>,
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<(S, S)> {
    w_set.expect_dim(6, "linearized w samples")?;
    obs_set.expect_dim(4, "linearized obstacle samples")?;
    if w_set.len() < 2 || obs_set.len() < 2 {
        return Err(Error::shape("linearized baseline needs at least two samples per set"));
    }
    let model = DoubleIntegrator::new(dt);
    let csq = geom.combined_sq();
    let mut z: Vec<S> = w_set.mean();
    z.extend(obs_set.mean());
    let f_at = |z: &[S]| f_value(&z[..6], &z[6..], &u, csq, &model);
    let mean = f_at(&z);

    let h = S::lit(FD_STEP);
    let mut grad = [S::zero(); 10];
    for (k, g) in grad.iter_mut().enumerate() {
        let orig = z[k];
        z[k] = orig + h;
        let hi = f_at(&z);
        z[k] = orig - h;
        let lo = f_at(&z);
        z[k] = orig;
        *g = (hi - lo) / (h + h);
    }
    let var = quad_form(&grad[..6], &w_set.covariance()) + quad_form(&grad[6..], &obs_set.covariance());
    let ridge = S::lit(COVARIANCE_RIDGE) * grad.iter().map(|&g| g * g).sum::<S>();
    Ok((mean, (var + ridge).max(S::zero()).sqrt()))
}

fn quad_form<S: Scalar>(g: &[S], cov: &[S]) -> S {
    let n = g.len();
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            acc += g[i] * cov[i * n + j] * g[j];
        }
    }
    acc
}

/// `f(mean) + z_η·σ ≤ 0` for the linearized Gaussian surrogate.
pub fn linearized_gaussian_feasible<S: Scalar>(
    w_set: &SampleSet<S>,
    obs_set: &SampleSet<S>,
    u: ControlInput<S>,
    eta: f64,
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<bool> {
    let (mean, std) = linearized_gaussian_moments(w_set, obs_set, u, geom, dt)?;
    Ok(mean + S::lit(normal_quantile(eta)) * std <= S::zero())
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// A weighted subset of `full` whose embedding under `spec` best matches
/// the full set's: the first `n` samples with reduced-set weights.
pub fn reduce_samples<S: Scalar>(full: &SampleSet<S>, n: usize, spec: &KernelSpec) -> Result<SampleSet<S>> {
    let reduced = full.head(n);
    if n >= full.len() {
        return Ok(reduced);
    }
    let weights = reduced_set_weights(full, &reduced, spec)?;
    reduced.with_weights(weights.into_vec())
}

/// Per-obstacle state the distance methods precompute once per step.
enum Reference<S> {
    Moments(PolyMoments<S>),
    Samples(ConstraintSampleSet<S>),
    Mixture(GmmModel<S>),
    None,
}

/// Scores every grid control. `None` marks a control rejected by a hard
/// feasibility filter.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_controls<S: Scalar>(
    w_set: &SampleSet<S>,
    obstacles: &[ObstacleView<'_, S>],
    desired: &[DesiredDistribution<S>],
    cost: &TrackingCost<S>,
    cfg: &PlannerConfig,
    controls: &[ControlInput<S>],
    dt: S,
    seed: u64,
) -> Result<Vec<Option<ControlDecision<S>>>> {
    cfg.validate()?;
    w_set.expect_dim(6, "planner w samples")?;
    if w_set.is_empty() {
        return Err(Error::shape("planner needs robot samples"));
    }
    for o in obstacles {
        o.samples.expect_dim(4, "planner obstacle samples")?;
        if o.samples.is_empty() {
            return Err(Error::shape("planner needs obstacle samples"));
        }
    }
    if cfg.method.uses_desired() && desired.len() != obstacles.len() {
        return Err(Error::shape(format!(
            "{} obstacles but {} desired distributions",
            obstacles.len(),
            desired.len()
        )));
    }
    let spec = cfg.kernel();
    let cost = cost.with_weight(S::lit(cfg.tracking_weight));
    let model = DoubleIntegrator::new(dt);
    let scales: Vec<S> = obstacles.iter().map(|o| cfg.f_scale_for(&o.geometry)).collect();
    let pair_w: Vec<Vec<S>> = obstacles.iter().map(|o| pair_weights(w_set, o.samples)).collect();

    let references: Vec<Reference<S>> = match cfg.method {
        Method::Rkhs | Method::GmmKld => desired
            .iter()
            .zip(&scales)
            .enumerate()
            .map(|(j, (d, &scale))| {
                let set = d.constraint_samples.scaled(scale);
                Ok(match (cfg.method, cfg.mmd_route) {
                    (Method::Rkhs, MmdRoute::Moments) => Reference::Moments(PolyMoments::from_set(&set, &spec)),
                    (Method::Rkhs, MmdRoute::Gram) => Reference::Samples(set),
                    _ => Reference::Mixture(fit_gmm(
                        &set,
                        cfg.gmm_components.min(set.len()),
                        stream(seed, j as u64, 0),
                        cfg.gmm_max_iter,
                        S::lit(cfg.gmm_tol),
                    )?),
                })
            })
            .collect::<Result<_>>()?,
        _ => obstacles.iter().map(|_| Reference::None).collect(),
    };
    let w_mean = w_set.mean();
    let obs_means: Vec<Vec<S>> = obstacles.iter().map(|o| o.samples.mean()).collect();
    let rho = S::lit(cfg.rho);

    let score = |u: &ControlInput<S>| -> Result<Option<ControlDecision<S>>> {
        let mut per = Vec::with_capacity(obstacles.len());
        let mut values = Vec::new();
        for (j, o) in obstacles.iter().enumerate() {
            let csq = o.geometry.combined_sq();
            let d = match (&references[j], cfg.method) {
                (_, Method::Deterministic) => {
                    if f_value(&w_mean, &obs_means[j], u, csq, &model) > S::zero() {
                        return Ok(None);
                    }
                    S::zero()
                }
                (_, Method::LinearizedGaussian) => {
                    if !linearized_gaussian_feasible(w_set, o.samples, *u, cfg.eta, &o.geometry, dt)? {
                        return Ok(None);
                    }
                    S::zero()
                }
                (_, Method::EvGauss) => {
                    pvo_values_into(w_set, o.samples, u, csq, &model, &mut values);
                    let set = ConstraintSampleSet::new(std::mem::take(&mut values), pair_w[j].clone())?;
                    if !ev_gauss_feasible(&set, cfg.eta) {
                        return Ok(None);
                    }
                    S::zero()
                }
                (Reference::Moments(target), _) => {
                    pvo_values_into(w_set, o.samples, u, csq, &model, &mut values);
                    let inv = S::one() / scales[j];
                    for v in values.iter_mut() {
                        *v *= inv;
                    }
                    PolyMoments::from_values(&values, &pair_w[j], &spec).distance_sq(target)
                }
                (Reference::Samples(target), _) => {
                    pvo_values_into(w_set, o.samples, u, csq, &model, &mut values);
                    let set = ConstraintSampleSet::new(std::mem::take(&mut values), pair_w[j].clone())?;
                    mmd_squared(&set.scaled(scales[j]), target, &spec)
                }
                (Reference::Mixture(target), _) => {
                    pvo_values_into(w_set, o.samples, u, csq, &model, &mut values);
                    let set = ConstraintSampleSet::new(std::mem::take(&mut values), pair_w[j].clone())?
                        .scaled(scales[j]);
                    // common random numbers across controls within a step
                    let fit = fit_gmm(&set, cfg.gmm_components, stream(seed, j as u64, 1), cfg.gmm_max_iter, S::lit(cfg.gmm_tol))?;
                    kl_divergence(&fit, target, cfg.mc_samples, stream(seed, j as u64, 2))?.estimate
                }
                (Reference::None, _) => unreachable!("distance methods always carry a reference"),
            };
            per.push(d);
        }
        let (tracking, control) = cost.terms(*u);
        let dist: S = per.iter().fold(S::zero(), |a, &b| a + b);
        Ok(Some(ControlDecision {
            control: *u,
            tracking_cost: tracking,
            control_cost: control,
            dist_cost: dist,
            total: cost.weight * tracking + control + rho * dist,
            per_obstacle_dist: per,
        }))
    };
    controls.par_iter().map(score).collect()
}

/// Best candidate under [`cost_order`]. Errors when every candidate was
/// filtered out.
pub fn pick_best<S: Scalar>(candidates: Vec<Option<ControlDecision<S>>>, method: Method) -> Result<ControlDecision<S>> {
    candidates
        .into_iter()
        .flatten()
        .min_by(|a, b| cost_order((a.total, a.control_cost, a.control), (b.total, b.control_cost, b.control)))
        .ok_or_else(|| Error::NoFeasibleControl { method: method.name().to_string() })
}

/// Evaluates the configured grid and returns the cheapest admissible
/// control.
#[allow(clippy::too_many_arguments)]
pub fn select_control<S: Scalar>(
    w_set: &SampleSet<S>,
    obstacles: &[ObstacleView<'_, S>],
    desired: &[DesiredDistribution<S>],
    cost: &TrackingCost<S>,
    cfg: &PlannerConfig,
    dt: S,
    seed: u64,
) -> Result<ControlDecision<S>> {
    let controls = cfg.grid.controls();
    let candidates = evaluate_controls(w_set, obstacles, desired, cost, cfg, &controls, dt, seed)?;
    pick_best(candidates, cfg.method)
}

/// Derives an independent seed for `(index, purpose)` from a base seed.
pub fn stream(seed: u64, index: u64, purpose: u64) -> u64 {
    // splitmix64 finalizer over a combined key
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(purpose.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desired::{build_desired_multi, mean_state, ObstacleScenarios};
    use crate::uncertainty::{concat_w, sample_noise, NoiseModel, RobotState};

    fn robot_set(state: [f64; 4], sigma: f64, n: usize, seed: u64) -> SampleSet<f64> {
        let xi = sample_noise::<f64>(&NoiseModel::gaussian(4, sigma), n, seed).unwrap().shifted(&state);
        let delta = sample_noise::<f64>(&NoiseModel::gaussian(2, sigma), n, seed + 1).unwrap();
        concat_w(&xi, &delta).unwrap()
    }

    #[test]
    fn ev_gauss_examples() {
        assert!(ev_gauss_feasible(&ConstraintSampleSet::uniform(vec![-5.0f64; 4]), 0.3));
        // mean 0, std 1
        let s = ConstraintSampleSet::uniform(vec![-1.0f64, 1.0]);
        assert!(!ev_gauss_feasible(&s, 0.5));
        // mean -3, std 1, eps 2
        let s = ConstraintSampleSet::uniform(vec![-4.0f64, -2.0]);
        assert!(ev_gauss_feasible(&s, 0.8));
        assert!((cantelli_epsilon(0.8) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linearized_reduces_to_mean_test_without_spread() {
        let w = robot_set([0.0, 1.0, 0.0, 0.0], 0.0, 4, 1);
        let o = sample_noise::<f64>(&NoiseModel::zero(4), 4, 2).unwrap().shifted(&[5.0, 0.0, 0.0, 0.0]);
        let g = ObstacleGeometry::new(0.5, 0.5).unwrap();
        let (m, s) = linearized_gaussian_moments(&w, &o, ControlInput::zero(), &g, 0.1).unwrap();
        assert!((m - 1.0).abs() < 1e-9 && s < 1e-6);
        assert!(!linearized_gaussian_feasible(&w, &o, ControlInput::zero(), 0.5, &g, 0.1).unwrap());
        assert_eq!(normal_quantile(0.5), 0.0);
    }

    #[test]
    fn grid_is_lexicographic_and_contains_zero() {
        let g = ControlGrid { ax: 1.0, ay: 2.0, nx: 3, ny: 3 };
        let c: Vec<ControlInput<f64>> = g.controls();
        assert_eq!(c.len(), 9);
        assert_eq!(c[0], ControlInput::new(-1.0, -2.0));
        assert_eq!(c[1], ControlInput::new(-1.0, 0.0));
        assert_eq!(c[4], ControlInput::zero());
    }

    #[test]
    fn no_obstacles_gives_unconstrained_minimizer() {
        let w = robot_set([0.0, 0.0, 0.0, 0.0], 0.01, 10, 1);
        let target = RobotState::new(0.05, 1.0, 0.0, 0.0);
        let cost = TrackingCost::new(mean_state(&w).unwrap(), target, 0.1).with_weight(10.0);
        for method in Method::ALL {
            let mut cfg = PlannerConfig::new(method);
            cfg.tracking_weight = 10.0;
            let d = select_control(&w, &[], &[], &cost, &cfg, 0.1, 0).unwrap();
            let best = cfg
                .grid
                .controls()
                .into_iter()
                .map(|u| cost.total(u))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d.total, best);
            assert_eq!(d.dist_cost, 0.0);
        }
    }

    #[test]
    fn routes_agree_and_total_decomposes() {
        let w = robot_set([0.0, 1.0, 0.0, 0.0], 0.05, 20, 1);
        let o = sample_noise::<f64>(&NoiseModel::gaussian(4, 0.05), 20, 2)
            .unwrap()
            .shifted(&[3.0, -0.5, 1.0, 0.0]);
        let geom = ObstacleGeometry::new(0.3, 0.3).unwrap();
        let cost = TrackingCost::new(mean_state(&w).unwrap(), RobotState::new(0.1, 1.0, 0.0, 0.0), 0.1);
        let mut cfg = PlannerConfig::new(Method::Rkhs);
        let controls: Vec<ControlInput<f64>> = cfg.grid.controls();
        let desired = build_desired_multi(
            &w,
            &[ObstacleScenarios { samples: &o, geometry: geom }],
            10,
            10,
            &controls,
            &cost,
            0.1,
        )
        .unwrap();
        let views = [ObstacleView { samples: &o, geometry: geom }];
        let a = evaluate_controls(&w, &views, &desired, &cost, &cfg, &controls, 0.1, 0).unwrap();
        cfg.mmd_route = MmdRoute::Gram;
        let b = evaluate_controls(&w, &views, &desired, &cost, &cfg, &controls, 0.1, 0).unwrap();
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert!((x.dist_cost - y.dist_cost).abs() <= 1e-9 * x.dist_cost.max(1.0));
            assert!((x.total - (x.tracking_cost + x.control_cost + x.dist_cost)).abs() < 1e-9);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
