//! Velocity-obstacle constraint for disk-shaped robot and obstacle, and its
//! empirical distribution over sampled uncertainty.
//!
//! `f ≤ 0` means the relative-velocity ray misses the inflated obstacle disk.

use crate::error::{Error, Result};
use crate::scalar::{weighted_mean, Scalar};
use crate::uncertainty::{weight_tolerance, ControlInput, DoubleIntegrator, RobotState, SampleSet};

/// Relative speeds at or below this are treated as zero.
pub const VELOCITY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObstacleGeometry<S> {
    pub robot_radius: S,
    pub obstacle_radius: S,
}

impl<S: Scalar> ObstacleGeometry<S> {
    pub fn new(robot_radius: S, obstacle_radius: S) -> Result<Self> {
        if !(robot_radius > S::zero() && robot_radius.is_finite()) {
            return Err(Error::config("robot_radius", "must be positive"));
        }
        if !(obstacle_radius > S::zero() && obstacle_radius.is_finite()) {
            return Err(Error::config("obstacle_radius", "must be positive"));
        }
        Ok(Self { robot_radius, obstacle_radius })
    }

    pub fn combined(&self) -> S {
        self.robot_radius + self.obstacle_radius
    }

    pub fn combined_sq(&self) -> S {
        let r = self.combined();
        r * r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoEval<S> {
    pub value: S,
    /// Relative velocity was (numerically) zero; `value` is the static
    /// overlap test `(R + R_o)^2 - |r|^2`.
    pub degenerate: bool,
}

#[inline]
pub(crate) fn vo_raw<S: Scalar>(rx: S, ry: S, vx: S, vy: S, combined_sq: S) -> S {
    let v2 = vx * vx + vy * vy;
    let r2 = rx * rx + ry * ry;
    let eps = S::lit(VELOCITY_EPS);
    if v2 <= eps * eps {
        return combined_sq - r2;
    }
    let rv = rx * vx + ry * vy;
    rv * rv / v2 - r2 + combined_sq
}

/// `(rᵀv)² / |v|² - |r|² + (R + R_o)²`.
pub fn vo_value<S: Scalar>(rel_pos: [S; 2], rel_vel: [S; 2], geom: &ObstacleGeometry<S>) -> VoEval<S> {
    let [rx, ry] = rel_pos;
    let [vx, vy] = rel_vel;
    let eps = S::lit(VELOCITY_EPS);
    VoEval {
        value: vo_raw(rx, ry, vx, vy, geom.combined_sq()),
        degenerate: vx * vx + vy * vy <= eps * eps,
    }
}

fn check_pair<S: Scalar>(w: &[S], obs: &[S]) -> Result<()> {
    if w.len() != 6 {
        return Err(Error::shape(format!("w sample must be 6-dimensional, got {}", w.len())));
    }
    if obs.len() != 4 {
        return Err(Error::shape(format!("obstacle sample must be 4-dimensional, got {}", obs.len())));
    }
    Ok(())
}

#[inline]
fn robot_next<S: Scalar>(w: &[S], u: &ControlInput<S>, model: &DoubleIntegrator<S>) -> RobotState<S> {
    let xi = RobotState { x: w[0], vx: w[1], y: w[2], vy: w[3] };
    model.step(&xi, u.ax + w[4], u.ay + w[5])
}

#[inline]
pub(crate) fn f_value<S: Scalar>(
    w: &[S],
    obs: &[S],
    u: &ControlInput<S>,
    combined_sq: S,
    model: &DoubleIntegrator<S>,
) -> S {
    let r = robot_next(w, u, model);
    vo_raw(r.x - obs[0], r.y - obs[2], r.vx - obs[1], r.vy - obs[3], combined_sq)
}

/// Propagates the robot sample one step under `u` (with the sample's own
/// perturbation) and evaluates the velocity obstacle against the obstacle
/// sample.
pub fn vo_of_control<S: Scalar>(
    w: &[S],
    obs: &[S],
    u: ControlInput<S>,
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<VoEval<S>> {
    check_pair(w, obs)?;
    let r = robot_next(w, &u, &DoubleIntegrator::new(dt));
    Ok(vo_value([r.x - obs[0], r.y - obs[2]], [r.vx - obs[1], r.vy - obs[3]], geom))
}

/// As [`vo_of_control`], but with the relative position taken before the
/// control acts (position rows of `B` zeroed).
pub fn vo_of_control_decoupled<S: Scalar>(
    w: &[S],
    obs: &[S],
    u: ControlInput<S>,
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<VoEval<S>> {
    check_pair(w, obs)?;
    let xi = RobotState { x: w[0], vx: w[1], y: w[2], vy: w[3] };
    let r = DoubleIntegrator::new(dt).step_decoupled(&xi, u.ax + w[4], u.ay + w[5]);
    Ok(vo_value([r.x - obs[0], r.y - obs[2]], [r.vx - obs[1], r.vy - obs[3]], geom))
}

/// Coefficients of `f·|v|² = h1 ux² + h2 ux uy + h3 uy² + h4 ux + h5 uy + h6`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoCoefficients<S> {
    pub h: [S; 6],
}

impl<S: Scalar> VoCoefficients<S> {
    pub fn eval(&self, u: ControlInput<S>) -> S {
        let [h1, h2, h3, h4, h5, h6] = self.h;
        h1 * u.ax * u.ax + h2 * u.ax * u.ay + h3 * u.ay * u.ay + h4 * u.ax + h5 * u.ay + h6
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().all(|h| h.is_finite())
    }
}

/// Quadratic-in-control form of the cleared constraint `f·|v|²`, exact when
/// the relative position does not depend on the control.
pub fn vo_coefficients<S: Scalar>(
    w: &[S],
    obs: &[S],
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<VoCoefficients<S>> {
    check_pair(w, obs)?;
    let two = S::lit(2.0);
    let rx = w[0] + w[1] * dt - obs[0];
    let ry = w[2] + w[3] * dt - obs[2];
    // relative velocity at zero control
    let ax = w[1] + dt * w[4] - obs[1];
    let ay = w[3] + dt * w[5] - obs[3];
    let c = rx * rx + ry * ry - geom.combined_sq();
    let ra = rx * ax + ry * ay;
    let dt2 = dt * dt;
    Ok(VoCoefficients {
        h: [
            dt2 * (rx * rx - c),
            dt2 * two * rx * ry,
            dt2 * (ry * ry - c),
            two * dt * (ra * rx - c * ax),
            two * dt * (ra * ry - c * ay),
            ra * ra - c * (ax * ax + ay * ay),
        ],
    })
}

/// Scalar constraint samples with (possibly signed) weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSampleSet<S> {
    values: Vec<S>,
    weights: Vec<S>,
}

impl<S: Scalar> ConstraintSampleSet<S> {
    pub fn new(values: Vec<S>, weights: Vec<S>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::shape(format!("{} values but {} weights", values.len(), weights.len())));
        }
        Ok(Self { values, weights })
    }

    pub fn uniform(values: Vec<S>) -> Self {
        let n = values.len();
        let w = if n == 0 { S::zero() } else { S::one() / S::from_usize_lossy(n) };
        Self { weights: vec![w; n], values }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weights_normalized(&self) -> bool {
        let total: S = self.weights.iter().copied().sum();
        (total.as_f64() - 1.0).abs() <= weight_tolerance::<S>(self.len())
    }

    pub fn max(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn mean(&self) -> S {
        weighted_mean(self.values.iter().copied().zip(self.weights.iter().copied()))
    }

    /// Weighted second central moment.
    pub fn variance(&self) -> S {
        let m = self.mean();
        weighted_mean(self.values.iter().map(|&v| (v - m) * (v - m)).zip(self.weights.iter().copied()))
    }

    /// Weighted mass at `f ≤ 0`.
    pub fn satisfied_fraction(&self) -> S {
        let total: S = self.weights.iter().copied().sum();
        let ok: S = self
            .values
            .iter()
            .zip(&self.weights)
            .filter(|(v, _)| **v <= S::zero())
            .map(|(_, &w)| w)
            .sum();
        ok / total
    }

    /// Every value divided by `scale`; sign-preserving for `scale > 0`.
    pub fn scaled(&self, scale: S) -> Self {
        Self {
            values: self.values.iter().map(|&v| v / scale).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Flattened outer product of the two weight vectors, `w`-major.
pub fn pair_weights<S: Scalar>(w_set: &SampleSet<S>, obs_set: &SampleSet<S>) -> Vec<S> {
    let mut out = Vec::with_capacity(w_set.len() * obs_set.len());
    for &a in w_set.weights() {
        out.extend(obs_set.weights().iter().map(|&b| a * b));
    }
    out
}

pub(crate) fn pvo_values_into<S: Scalar>(
    w_set: &SampleSet<S>,
    obs_set: &SampleSet<S>,
    u: &ControlInput<S>,
    combined_sq: S,
    model: &DoubleIntegrator<S>,
    out: &mut Vec<S>,
) {
    out.clear();
    out.reserve(w_set.len() * obs_set.len());
    for w in w_set.samples() {
        let r = robot_next(w, u, model);
        for o in obs_set.samples() {
            out.push(vo_raw(r.x - o[0], r.y - o[2], r.vx - o[1], r.vy - o[3], combined_sq));
        }
    }
}

/// Constraint value for every `(w_p, obs_q)` pair under control `u`, with
/// weight `α_p β_q`.
pub fn pvo_samples<S: Scalar>(
    w_set: &SampleSet<S>,
    obs_set: &SampleSet<S>,
    u: ControlInput<S>,
    geom: &ObstacleGeometry<S>,
    dt: S,
) -> Result<ConstraintSampleSet<S>> {
    w_set.expect_dim(6, "pvo w samples")?;
    obs_set.expect_dim(4, "pvo obstacle samples")?;
    if w_set.is_empty() || obs_set.is_empty() {
        return Err(Error::shape("pvo_samples needs nonempty sample sets"));
    }
    let mut values = Vec::new();
    pvo_values_into(w_set, obs_set, &u, geom.combined_sq(), &DoubleIntegrator::new(dt), &mut values);
    ConstraintSampleSet::new(values, pair_weights(w_set, obs_set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn geom(total: f64) -> ObstacleGeometry<f64> {
        ObstacleGeometry::new(total / 2.0, total / 2.0).unwrap()
    }

    #[test]
    fn collinear_course_is_inside() {
        let e = vo_value([5.0, 0.0], [1.0, 0.0], &geom(1.0));
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-12);
        assert!(!e.degenerate);
    }

    #[test]
    fn perpendicular_course_is_outside() {
        assert_abs_diff_eq!(vo_value([5.0, 0.0], [0.0, 1.0], &geom(1.0)).value, -24.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_evaluated_oblique_case() {
        assert_abs_diff_eq!(vo_value([3.0, 4.0], [3.0, 4.0], &geom(2.0)).value, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_relative_velocity_uses_static_overlap() {
        let e = vo_value([10.0, 0.0], [0.0, 0.0], &geom(1.0));
        assert!(e.degenerate);
        assert_abs_diff_eq!(e.value, -99.0, epsilon = 1e-12);
    }

    #[test]
    fn geometry_rejects_nonpositive_radii() {
        assert!(ObstacleGeometry::new(0.0, 1.0).is_err());
        assert!(ObstacleGeometry::new(1.0, -1.0).is_err());
    }

    #[test]
    fn both_static_gives_limit_value() {
        let g = geom(1.0);
        let e = vo_of_control(&[0.0; 6], &[10.0, 0.0, 0.0, 0.0], ControlInput::zero(), &g, 0.1).unwrap();
        assert!(e.degenerate);
        assert_abs_diff_eq!(e.value, -100.0 + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn composes_propagation_and_vo() {
        let w = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let e = vo_of_control(&w, &[5.0, 0.0, 0.0, 0.0], ControlInput::zero(), &geom(1.0), 0.1).unwrap();
        // robot at (0.1, 0); r = (-4.9, 0), v = (1, 0)
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shape_errors() {
        let g = geom(1.0);
        assert!(vo_of_control(&[0.0; 5], &[0.0; 4], ControlInput::zero(), &g, 0.1).is_err());
        assert!(vo_coefficients(&[0.0; 6], &[0.0; 3], &g, 0.1).is_err());
    }

    #[test]
    fn quadratic_form_reproduces_cleared_constraint() {
        let g = geom(1.3);
        let dt = 0.25;
        let w = [0.3, 0.8, -0.4, 0.2, 0.05, -0.1];
        let obs = [4.0, -0.6, 0.5, 0.1];
        let h = vo_coefficients(&w, &obs, &g, dt).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let u = ControlInput::new(-2.0 + i as f64, -2.0 + j as f64);
                let f = vo_of_control_decoupled(&w, &obs, u, &g, dt).unwrap().value;
                let vx = w[1] + dt * (u.ax + w[4]) - obs[1];
                let vy = w[3] + dt * (u.ay + w[5]) - obs[3];
                let cleared = f * (vx * vx + vy * vy);
                assert_abs_diff_eq!(h.eval(u), cleared, epsilon = 1e-9);
                assert_eq!(h.eval(u) > 0.0, f > 0.0);
            }
        }
    }

    #[test]
    fn zero_control_isolates_constant_term() {
        let g = geom(1.0);
        let h = vo_coefficients(&[0.0; 6], &[3.0, 0.0, 0.0, 0.0], &g, 0.1).unwrap();
        assert_eq!(h.eval(ControlInput::zero()), h.h[5]);
        // static pair: cleared form vanishes at zero relative velocity
        assert_abs_diff_eq!(h.h[5], 0.0, epsilon = 1e-15);
        // r = (-3, 0), c = 9 - 1 = 8
        assert_abs_diff_eq!(h.h[0], 0.01 * (9.0 - 8.0), epsilon = 1e-12);
        assert_abs_diff_eq!(h.h[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.h[2], 0.01 * -8.0, epsilon = 1e-12);
    }

    #[test]
    fn pvo_single_pair_matches_direct_evaluation() {
        let g = geom(1.0);
        let w = SampleSet::from_rows(&[vec![0.0, 1.0, 0.2, 0.0, 0.1, 0.0]], 0).unwrap();
        let o = SampleSet::from_rows(&[vec![5.0, -1.0, 0.0, 0.0]], 0).unwrap();
        let u = ControlInput::new(0.5, 1.0);
        let set = pvo_samples(&w, &o, u, &g, 0.1).unwrap();
        let direct = vo_of_control(w.sample(0), o.sample(0), u, &g, 0.1).unwrap().value;
        assert_eq!(set.values(), &[direct]);
        assert_eq!(set.weights(), &[1.0]);
    }

    #[test]
    fn satisfied_fraction_counts_weighted_mass() {
        let s = ConstraintSampleSet::new(vec![-1.0, 0.0, 2.0, -3.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_abs_diff_eq!(s.satisfied_fraction(), 0.7, epsilon = 1e-15);
        assert_eq!(s.max(), 2.0);
    }
}
