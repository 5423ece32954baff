//! One-dimensional Gaussian mixtures fitted to constraint samples, and a
//! Monte-Carlo KL divergence between two of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vo::ConstraintSampleSet;

/// Lower bound on component variances.
pub const VARIANCE_FLOOR: f64 = 1e-9;
/// Densities below this are floored when evaluating log-ratios.
pub const DENSITY_FLOOR: f64 = 1e-300;

const KMEANS_ITERS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct GmmModel<S> {
    weights: Vec<S>,
    means: Vec<S>,
    variances: Vec<S>,
}

impl<S: Scalar> GmmModel<S> {
    pub fn new(weights: Vec<S>, means: Vec<S>, variances: Vec<S>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || variances.len() != k {
            return Err(Error::shape("mixture needs matching, nonempty weight/mean/variance lists"));
        }
        if weights.iter().any(|&w| !(w >= S::zero())) {
            return Err(Error::config("weights", "mixture weights must be nonnegative"));
        }
        let total: S = weights.iter().copied().sum();
        if (total.as_f64() - 1.0).abs() > 1e-9 {
            return Err(Error::config("weights", format!("mixture weights sum to {total}")));
        }
        if means.iter().any(|m| !m.is_finite()) || variances.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite mixture parameter".into()));
        }
        let floor = S::lit(VARIANCE_FLOOR);
        let variances = variances.into_iter().map(|v| v.max(floor)).collect();
        Ok(Self { weights, means, variances })
    }

    /// A single Gaussian component.
    pub fn gaussian(mean: S, variance: S) -> Self {
        Self {
            weights: vec![S::one()],
            means: vec![mean],
            variances: vec![variance.max(S::lit(VARIANCE_FLOOR))],
        }
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn means(&self) -> &[S] {
        &self.means
    }

    pub fn variances(&self) -> &[S] {
        &self.variances
    }

    pub fn log_pdf(&self, x: S) -> S {
        let terms = (0..self.components()).map(|c| self.weights[c].ln() + log_normal(x, self.means[c], self.variances[c]));
        log_sum_exp(terms)
    }

    pub fn pdf(&self, x: S) -> S {
        self.log_pdf(x).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = self.components() - 1;
        for (c, w) in self.weights.iter().enumerate() {
            acc += w.as_f64();
            if u < acc {
                pick = c;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        self.means[pick] + self.variances[pick].sqrt() * S::lit(z)
    }
}

fn log_normal<S: Scalar>(x: S, mean: S, var: S) -> S {
    let d = x - mean;
    -S::lit(0.5) * (S::lit(std::f64::consts::TAU) * var).ln() - d * d / (S::lit(2.0) * var)
}

fn log_sum_exp<S: Scalar>(terms: impl Iterator<Item = S> + Clone) -> S {
    let max = terms.clone().fold(S::neg_infinity(), S::max);
    if max == S::neg_infinity() {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<S>().ln()
}

/// Sample weights clamped to be nonnegative and renormalized. Reduced-set
/// weights can be negative, which a likelihood cannot use.
fn likelihood_weights<S: Scalar>(samples: &ConstraintSampleSet<S>) -> Vec<S> {
    let clamped: Vec<S> = samples.weights().iter().map(|&w| w.max(S::zero())).collect();
    let total: S = clamped.iter().copied().sum();
    if total > S::zero() {
        clamped.into_iter().map(|w| w / total).collect()
    } else {
        vec![S::one() / S::from_usize_lossy(samples.len()); samples.len()]
    }
}

/// Centers at the weighted `(i + 1/2)/k` quantiles, refined by 1D Lloyd
/// iterations. Returns hard assignments.
fn kmeans_init<S: Scalar>(x: &[S], w: &[S], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut centers = Vec::with_capacity(k);
    let mut acc = S::zero();
    let mut pos = 0;
    for c in 0..k {
        let q = S::lit((c as f64 + 0.5) / k as f64);
        while pos + 1 < order.len() && acc + w[order[pos]] < q {
            acc += w[order[pos]];
            pos += 1;
        }
        centers.push(x[order[pos]]);
    }
    let mut assign = vec![0usize; x.len()];
    for _ in 0..KMEANS_ITERS {
        let mut changed = false;
        for (i, &xi) in x.iter().enumerate() {
            let mut best = 0;
            for c in 1..k {
                if (xi - centers[c]).abs() < (xi - centers[best]).abs() {
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        let mut num = vec![S::zero(); k];
        let mut den = vec![S::zero(); k];
        for i in 0..x.len() {
            num[assign[i]] += w[i] * x[i];
            den[assign[i]] += w[i];
        }
        for c in 0..k {
            if den[c] > S::zero() {
                centers[c] = num[c] / den[c];
            }
        }
        if !changed {
            break;
        }
    }
    assign
}

/// Component parameters from (soft or hard) responsibilities. Components
/// with no mass keep their previous parameters and zero weight.
fn m_step<S: Scalar>(x: &[S], w: &[S], resp: &[S], k: usize, model: &mut GmmModel<S>) {
    let floor = S::lit(VARIANCE_FLOOR);
    for c in 0..k {
        let mut mass = S::zero();
        let mut num = S::zero();
        for i in 0..x.len() {
            let r = w[i] * resp[i * k + c];
            mass += r;
            num += r * x[i];
        }
        model.weights[c] = mass;
        if mass <= S::zero() {
            continue;
        }
        let mean = num / mass;
        let mut var = S::zero();
        for i in 0..x.len() {
            let d = x[i] - mean;
            var += w[i] * resp[i * k + c] * d * d;
        }
        model.means[c] = mean;
        model.variances[c] = (var / mass).max(floor);
    }
    let total: S = model.weights.iter().copied().sum();
    for v in model.weights.iter_mut() {
        *v /= total;
    }
}

/// E-step; returns the weighted log-likelihood of the current model.
fn e_step<S: Scalar>(x: &[S], w: &[S], k: usize, model: &GmmModel<S>, resp: &mut [S]) -> S {
    // per-component log-weight plus normalizer, and 1/(2σ²)
    let offset: Vec<S> = (0..k)
        .map(|c| model.weights[c].ln() - S::lit(0.5) * (S::lit(std::f64::consts::TAU) * model.variances[c]).ln())
        .collect();
    let inv2var: Vec<S> = model.variances.iter().map(|&v| S::one() / (S::lit(2.0) * v)).collect();
    let mut ll = S::zero();
    let mut logs = vec![S::zero(); k];
    for i in 0..x.len() {
        let mut max = S::neg_infinity();
        for c in 0..k {
            let d = x[i] - model.means[c];
            logs[c] = offset[c] - d * d * inv2var[c];
            max = max.max(logs[c]);
        }
        let row = &mut resp[i * k..(i + 1) * k];
        let mut total = S::zero();
        for c in 0..k {
            row[c] = (logs[c] - max).exp();
            total += row[c];
        }
        for r in row.iter_mut() {
            *r /= total;
        }
        ll += w[i] * (max + total.ln());
    }
    ll
}

/// EM fit of a `k`-component mixture. Returns the model and the weighted
/// log-likelihood after each iteration.
pub fn fit_gmm_with_trace<S: Scalar>(
    samples: &ConstraintSampleSet<S>,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: S,
) -> Result<(GmmModel<S>, Vec<S>)> {
    if k == 0 {
        return Err(Error::config("gmm_components", "need at least one component"));
    }
    if samples.len() < k {
        return Err(Error::config(
            "gmm_components",
            format!("{} samples cannot support {k} components", samples.len()),
        ));
    }
    let x = samples.values();
    let w = likelihood_weights(samples);
    let assign = kmeans_init(x, &w, k);
    let mut resp = vec![S::zero(); x.len() * k];
    for (i, &c) in assign.iter().enumerate() {
        resp[i * k + c] = S::one();
    }
    let mut model = GmmModel {
        weights: vec![S::zero(); k],
        means: vec![S::zero(); k],
        variances: vec![S::lit(VARIANCE_FLOOR); k],
    };
    m_step(x, &w, &resp, k, &mut model);
    // Empty initial clusters are parked on a random sample so every mean is
    // a finite value drawn from the data.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..k {
        if model.weights[c] <= S::zero() {
            model.means[c] = x[rng.gen_range(0..x.len())];
        }
    }

    let mut trace = Vec::with_capacity(max_iter);
    let mut prev = e_step(x, &w, k, &model, &mut resp);
    for _ in 0..max_iter {
        m_step(x, &w, &resp, k, &mut model);
        let ll = e_step(x, &w, k, &model, &mut resp);
        trace.push(ll);
        if (ll - prev).abs() < tol {
            break;
        }
        prev = ll;
    }
    Ok((model, trace))
}

pub fn fit_gmm<S: Scalar>(
    samples: &ConstraintSampleSet<S>,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: S,
) -> Result<GmmModel<S>> {
    fit_gmm_with_trace(samples, k, seed, max_iter, tol).map(|(m, _)| m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlEstimate<S> {
    pub estimate: S,
    pub std_error: S,
    /// Set when `q` underflowed at some draw and its density was floored.
    pub tail_warning: bool,
}

/// Monte-Carlo `KL(p || q)` with `mc_samples` draws from `p`.
pub fn kl_divergence<S: Scalar>(p: &GmmModel<S>, q: &GmmModel<S>, mc_samples: usize, seed: u64) -> Result<KlEstimate<S>> {
    if mc_samples == 0 {
        return Err(Error::config("mc_samples", "need at least one Monte-Carlo draw"));
    }
    let floor = S::lit(DENSITY_FLOOR.ln());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tail_warning = false;
    let (mut sum, mut sum_sq) = (S::zero(), S::zero());
    for _ in 0..mc_samples {
        let x = p.sample(&mut rng);
        let lq = q.log_pdf(x);
        let lq = if lq < floor {
            tail_warning = true;
            floor
        } else {
            lq
        };
        let lp = p.log_pdf(x).max(floor);
        let r = lp - lq;
        sum += r;
        sum_sq += r * r;
    }
    let m = S::from_usize_lossy(mc_samples);
    let mean = sum / m;
    let var = if mc_samples > 1 {
        ((sum_sq - m * mean * mean) / (m - S::one())).max(S::zero())
    } else {
        S::zero()
    };
    Ok(KlEstimate { estimate: mean, std_error: (var / m).sqrt(), tail_warning })
}
