//! Kernel mean embeddings under the polynomial kernel `(1 + x1ᵀx2)^d`.
//!
//! Two evaluation routes for the squared maximum mean discrepancy are
//! provided. [`mmd_squared`] works on Gram blocks (kernel trick) and is the
//! reference. [`PolyMoments`] uses the finite feature expansion of the
//! polynomial kernel on scalars, which gives the same value in `O(n·d)` and
//! is what the planner uses in its inner loop by default.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::solve_in_place;
use crate::scalar::Scalar;
use crate::uncertainty::{weight_tolerance, ControlInput, DoubleIntegrator, SampleSet};
use crate::vo::{pvo_values_into, ConstraintSampleSet, ObstacleGeometry};

/// Ridge added to the reduced-set Gram matrix, relative to its mean diagonal.
pub const REDUCED_SET_RIDGE: f64 = 1e-8;

/// Negative squared discrepancies up to this size (relative to the largest
/// term) are treated as round-off.
const MMD_ROUNDOFF: f64 = 1e-10;

/// Polynomial kernel of degree `d ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelSpec {
    degree: u32,
}

impl KernelSpec {
    pub fn new(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::config("degree", "polynomial kernel degree must be at least 1"));
        }
        Ok(Self { degree })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    #[inline]
    pub fn eval_scalar<S: Scalar>(&self, x1: S, x2: S) -> S {
        (S::one() + x1 * x2).powi(self.degree as i32)
    }

    #[inline]
    pub fn eval<S: Scalar>(&self, x1: &[S], x2: &[S]) -> S {
        let dot: S = x1.iter().zip(x2).map(|(&a, &b)| a * b).sum();
        (S::one() + dot).powi(self.degree as i32)
    }
}

pub fn poly_kernel<S: Scalar>(x1: &[S], x2: &[S], spec: &KernelSpec) -> Result<S> {
    if x1.len() != x2.len() {
        return Err(Error::shape(format!("kernel arguments of length {} and {}", x1.len(), x2.len())));
    }
    Ok(spec.eval(x1, x2))
}

/// Sample weights summing to one; entries may be negative.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingWeights<S> {
    weights: Vec<S>,
}

impl<S: Scalar> EmbeddingWeights<S> {
    pub fn as_slice(&self) -> &[S] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<S> {
        self.weights
    }

    pub fn sum(&self) -> S {
        self.weights.iter().copied().sum()
    }
}

/// Gram matrix `K[i][j] = k(xs_i, ys_j)`, row-major.
pub fn gram_matrix<S: Scalar>(xs: &SampleSet<S>, ys: &SampleSet<S>, spec: &KernelSpec) -> Vec<S> {
    let mut k = Vec::with_capacity(xs.len() * ys.len());
    for x in xs.samples() {
        k.extend(ys.samples().map(|y| spec.eval(x, y)));
    }
    k
}

/// Re-weights a reduced sample set so its embedding is as close as possible
/// to the embedding of the full set, subject to the weights summing to one.
///
/// Solves the KKT system
/// `[2(K_nn + λI)  1; 1ᵀ  0] [α; ν] = [2 K_Nnᵀ w_full; 1]`.
pub fn reduced_set_weights<S: Scalar>(
    full: &SampleSet<S>,
    reduced: &SampleSet<S>,
    spec: &KernelSpec,
) -> Result<EmbeddingWeights<S>> {
    if full.dim() != reduced.dim() {
        return Err(Error::shape(format!(
            "full set is {}-dimensional, reduced set {}-dimensional",
            full.dim(),
            reduced.dim()
        )));
    }
    let (big_n, n) = (full.len(), reduced.len());
    if n == 0 || n > big_n {
        return Err(Error::shape(format!("reduced set size {n} must be in 1..={big_n}")));
    }
    let k_nn = gram_matrix(reduced, reduced, spec);
    let mean_diag = (0..n).map(|i| k_nn[i * n + i]).sum::<S>() / S::from_usize_lossy(n);
    let ridge = S::lit(REDUCED_SET_RIDGE) * mean_diag.max(S::one());

    // Solve for the offset from uniform weights. The right-hand side is then a
    // residual, which keeps the near-null directions of K from amplifying
    // round-off when the reduced set already represents the full one.
    let m = n + 1;
    let two = S::lit(2.0);
    let base = S::one() / S::from_usize_lossy(n);
    let mut kkt = vec![S::zero(); m * m];
    let mut rhs = vec![S::zero(); m];
    for i in 0..n {
        let mut k_base = S::zero();
        for j in 0..n {
            kkt[i * m + j] = two * k_nn[i * n + j];
            k_base += base * k_nn[i * n + j];
        }
        kkt[i * m + i] += two * ridge;
        kkt[i * m + n] = S::one();
        kkt[n * m + i] = S::one();
        let target: S = full
            .samples()
            .zip(full.weights())
            .map(|(x, &w)| w * spec.eval(reduced.sample(i), x))
            .sum();
        rhs[i] = two * (target - k_base - ridge * base);
    }
    solve_in_place(&mut kkt, &mut rhs)?;
    rhs.truncate(n);
    for a in rhs.iter_mut() {
        *a += base;
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("reduced-set weights are not finite".into()));
    }
    Ok(EmbeddingWeights { weights: rhs })
}

/// `Σ_i Σ_j a_i b_j k(x_i, y_j)` for scalar samples.
fn embedding_inner<S: Scalar>(
    xa: &[S],
    wa: &[S],
    xb: &[S],
    wb: &[S],
    spec: &KernelSpec,
    symmetric: bool,
) -> S {
    let rows: Vec<S> = xa
        .par_iter()
        .zip(wa.par_iter())
        .enumerate()
        .map(|(i, (&x, &a))| {
            if symmetric {
                // upper triangle, off-diagonal counted twice
                let mut acc = a * wb[i] * spec.eval_scalar(x, xb[i]);
                let two = S::lit(2.0);
                for j in i + 1..xb.len() {
                    acc += two * a * wb[j] * spec.eval_scalar(x, xb[j]);
                }
                acc
            } else {
                let mut acc = S::zero();
                for (&y, &b) in xb.iter().zip(wb) {
                    acc += b * spec.eval_scalar(x, y);
                }
                a * acc
            }
        })
        .collect();
    rows.into_iter().sum()
}

fn clamp_roundoff<S: Scalar>(value: S, scale: S) -> S {
    if value >= S::zero() {
        return value;
    }
    debug_assert!(
        value.abs() <= S::lit(MMD_ROUNDOFF).max(S::epsilon() * S::lit(64.0)) * scale.max(S::one()),
        "MMD² of {value} is below round-off"
    );
    S::zero()
}

/// Squared MMD between two weighted scalar sample sets, evaluated through
/// the Gram blocks `C_a K_aa C_aᵀ - 2 C_a K_ab C_bᵀ + C_b K_bb C_bᵀ`.
pub fn mmd_squared<S: Scalar>(a: &ConstraintSampleSet<S>, b: &ConstraintSampleSet<S>, spec: &KernelSpec) -> S {
    let aa = embedding_inner(a.values(), a.weights(), a.values(), a.weights(), spec, true);
    let bb = embedding_inner(b.values(), b.weights(), b.values(), b.weights(), spec, true);
    // both orientations of the cross block, so that swapping a and b is bit-exact
    let ab = embedding_inner(a.values(), a.weights(), b.values(), b.weights(), spec, false);
    let ba = embedding_inner(b.values(), b.weights(), a.values(), a.weights(), spec, false);
    clamp_roundoff((aa + bb) - (ab + ba), aa.abs() + bb.abs())
}

/// Weighted power sums `M_k = Σ w_i x_i^k`, `k = 0..=d`, of a scalar sample
/// set. For the polynomial kernel on scalars
/// `⟨μ_a, μ_b⟩ = Σ_k C(d, k) M_k(a) M_k(b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMoments<S> {
    moments: Vec<S>,
    binomials: Vec<S>,
}

impl<S: Scalar> PolyMoments<S> {
    pub fn from_values(values: &[S], weights: &[S], spec: &KernelSpec) -> Self {
        let d = spec.degree() as usize;
        let mut moments = vec![S::zero(); d + 1];
        for (&x, &w) in values.iter().zip(weights) {
            let mut p = w;
            for m in moments.iter_mut() {
                *m += p;
                p *= x;
            }
        }
        let mut binomials = Vec::with_capacity(d + 1);
        let mut c = 1.0f64;
        for k in 0..=d {
            binomials.push(S::lit(c));
            c = c * (d - k) as f64 / (k + 1) as f64;
        }
        Self { moments, binomials }
    }

    pub fn from_set(set: &ConstraintSampleSet<S>, spec: &KernelSpec) -> Self {
        Self::from_values(set.values(), set.weights(), spec)
    }

    pub fn moments(&self) -> &[S] {
        &self.moments
    }

    pub fn inner(&self, other: &Self) -> S {
        self.binomials
            .iter()
            .zip(self.moments.iter().zip(&other.moments))
            .map(|(&c, (&a, &b))| c * a * b)
            .sum()
    }

    /// Squared RKHS distance between the two embeddings.
    pub fn distance_sq(&self, other: &Self) -> S {
        let v: S = self
            .binomials
            .iter()
            .zip(self.moments.iter().zip(&other.moments))
            .map(|(&c, (&a, &b))| c * (a - b) * (a - b))
            .sum();
        v.max(S::zero())
    }
}

/// Squared distance between the uniform embedding of `f` over `small_n`
/// sample pairs and the ground-truth embedding over `large_l` pairs. The
/// small sets are a seeded random subset of the large ones. Constraint
/// values are divided by `f_scale` before embedding.
#[allow(clippy::too_many_arguments)]
pub fn consistency_error<S: Scalar>(
    w_set: &SampleSet<S>,
    obs_set: &SampleSet<S>,
    u: ControlInput<S>,
    small_n: usize,
    large_l: usize,
    spec: &KernelSpec,
    geom: &ObstacleGeometry<S>,
    dt: S,
    f_scale: S,
    seed: u64,
) -> Result<S> {
    w_set.expect_dim(6, "consistency w samples")?;
    obs_set.expect_dim(4, "consistency obstacle samples")?;
    if small_n == 0 || small_n > large_l {
        return Err(Error::config("n", format!("need 1 <= n <= l, got n={small_n}, l={large_l}")));
    }
    if large_l > w_set.len() || large_l > obs_set.len() {
        return Err(Error::config("l", format!("l={large_l} exceeds the available samples")));
    }
    let big_w = w_set.head(large_l);
    let big_o = obs_set.head(large_l);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |set: &SampleSet<S>, rng: &mut ChaCha8Rng| -> SampleSet<S> {
        let mut idx = index::sample(rng, large_l, small_n).into_vec();
        idx.sort_unstable();
        let data = idx.iter().flat_map(|&i| set.sample(i).iter().copied()).collect();
        SampleSet::uniform(set.dim(), data, seed)
    };
    let small_w = pick(&big_w, &mut rng);
    let small_o = pick(&big_o, &mut rng);

    let model = DoubleIntegrator::new(dt);
    let mut values = Vec::new();
    let embed = |w: &SampleSet<S>, o: &SampleSet<S>, values: &mut Vec<S>| {
        pvo_values_into(w, o, &u, geom.combined_sq(), &model, values);
        ConstraintSampleSet::uniform(values.iter().map(|&v| v / f_scale).collect())
    };
    let small = embed(&small_w, &small_o, &mut values);
    let large = embed(&big_w, &big_o, &mut values);
    Ok(mmd_squared(&small, &large, spec))
}

/// Checks the sum-to-one constraint of reduced-set weights.
pub fn weights_sum_to_one<S: Scalar>(w: &EmbeddingWeights<S>) -> bool {
    (w.sum().as_f64() - 1.0).abs() <= weight_tolerance::<S>(w.weights.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::{sample_noise, NoiseModel};
    use approx::assert_abs_diff_eq;

    fn spec(d: u32) -> KernelSpec {
        KernelSpec::new(d).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(poly_kernel(&[0.0], &[0.0], &spec(3)).unwrap(), 1.0);
        assert_eq!(poly_kernel(&[1.0, 0.0], &[1.0, 0.0], &spec(2)).unwrap(), 4.0);
        assert_eq!(poly_kernel(&[1.0, 2.0], &[3.0, -1.0], &spec(2)).unwrap(), 4.0);
        assert!(poly_kernel(&[1.0], &[1.0, 2.0], &spec(1)).is_err());
        assert!(KernelSpec::new(0).is_err());
    }

    #[test]
    fn point_masses_at_zero_and_one() {
        let a = ConstraintSampleSet::uniform(vec![0.0]);
        let b = ConstraintSampleSet::uniform(vec![1.0]);
        assert_abs_diff_eq!(mmd_squared(&a, &b, &spec(1)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn self_distance_vanishes() {
        let a = ConstraintSampleSet::new(vec![-3.0, 0.5, 1.0, 2.5], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        for d in 1..=4 {
            assert!(mmd_squared(&a, &a, &spec(d)) <= 1e-10);
        }
    }

    #[test]
    fn moment_route_agrees_with_gram_route() {
        let a = ConstraintSampleSet::uniform(vec![-4.0, -1.5, 0.2, 0.9, -2.2]);
        let b = ConstraintSampleSet::new(vec![-3.0, -0.5, 0.4], vec![0.5, 0.7, -0.2]).unwrap();
        for d in 1..=4 {
            let s = spec(d);
            let gram: f64 = mmd_squared(&a, &b, &s);
            let mom = PolyMoments::from_set(&a, &s).distance_sq(&PolyMoments::from_set(&b, &s));
            assert_abs_diff_eq!(gram, mom, epsilon = 1e-9 * gram.max(1.0));
        }
    }

    #[test]
    fn single_reduced_sample_gets_unit_weight() {
        let full: SampleSet<f64> = sample_noise(&NoiseModel::gaussian(3, 1.0), 30, 4).unwrap();
        let w = reduced_set_weights(&full, &full.head(1), &spec(2)).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_sets_recover_uniform_weights() {
        let full: SampleSet<f64> = sample_noise(&NoiseModel::gaussian(2, 1.0), 12, 9).unwrap();
        for d in 1..=3 {
            let w = reduced_set_weights(&full, &full, &spec(d)).unwrap();
            assert!(weights_sum_to_one(&w));
            for &a in w.as_slice() {
                assert_abs_diff_eq!(a, 1.0 / 12.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn reduced_set_rejects_bad_sizes() {
        let full: SampleSet<f64> = sample_noise(&NoiseModel::gaussian(2, 1.0), 5, 9).unwrap();
        let other: SampleSet<f64> = sample_noise(&NoiseModel::gaussian(3, 1.0), 2, 9).unwrap();
        assert!(reduced_set_weights(&full, &other, &spec(1)).is_err());
        let bigger: SampleSet<f64> = sample_noise(&NoiseModel::gaussian(2, 1.0), 6, 9).unwrap();
        assert!(reduced_set_weights(&full, &bigger, &spec(1)).is_err());
    }

    #[test]
    fn consistency_error_vanishes_when_n_equals_l() {
        let w: SampleSet<f64> = sample_noise(&NoiseModel::gaussian(6, 0.2), 30, 1).unwrap();
        let o: SampleSet<f64> = sample_noise(&NoiseModel::gaussian(4, 0.2), 30, 2)
            .unwrap()
            .shifted(&[5.0, -1.0, 0.5, 0.0]);
        let g = ObstacleGeometry::new(0.5, 0.5).unwrap();
        let e = consistency_error(&w, &o, ControlInput::zero(), 30, 30, &spec(2), &g, 0.1, 1.0, 3).unwrap();
        assert!(e <= 1e-10);
        assert!(consistency_error(&w, &o, ControlInput::zero(), 31, 30, &spec(2), &g, 0.1, 1.0, 3).is_err());
    }
}
