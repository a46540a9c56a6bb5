//! Conjugate-Bayesian and classical estimation oracles: Beta–Bernoulli and
//! Gaussian–Gaussian updates, the uniform-support estimator zoo, and a
//! seeded Monte-Carlo risk driver.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{beta_fn, mean_var, sample_unit, task_rng};
use crate::real::Real;

/// Beta distribution hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> BetaParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if alpha <= T::zero() || beta <= T::zero() {
            return Err(Error::InvalidParameter(
                "Beta hyperparameters must be > 0".into(),
            ));
        }
        Ok(Self { alpha, beta })
    }

    pub fn flat() -> Self {
        Self {
            alpha: T::one(),
            beta: T::one(),
        }
    }

    /// Normalization constant `B(α, β)`.
    pub fn normalization(&self) -> T {
        beta_fn(self.alpha, self.beta)
    }

    /// Density at `theta ∈ (0, 1)`.
    pub fn pdf(&self, theta: T) -> T {
        if theta <= T::zero() || theta >= T::one() {
            return T::zero();
        }
        (theta.powf(self.alpha - T::one()) * (T::one() - theta).powf(self.beta - T::one()))
            / self.normalization()
    }
}

/// Conjugate update after observing `heads` successes in `trials` Bernoulli
/// draws: `(α₀ + k, β₀ + n − k)`.
pub fn beta_update<T: Real>(
    prior: BetaParams<T>,
    heads: usize,
    trials: usize,
) -> Result<BetaParams<T>> {
    if heads > trials {
        return Err(Error::InvalidParameter(format!(
            "heads {heads} > trials {trials}"
        )));
    }
    Ok(BetaParams {
        alpha: prior.alpha + T::of(heads),
        beta: prior.beta + T::of(trials - heads),
    })
}

/// Point estimates extracted from a Beta posterior.
#[derive(Clone, Copy, Debug)]
pub struct BetaEstimates<T> {
    /// Posterior mean `α/(α+β)`.
    pub ba: T,
    /// Posterior mode `(α−1)/(α+β−2)`; clamped to the support boundary when
    /// `α ≤ 1` or `β ≤ 1` (flagged below).
    pub map: T,
    /// The mode formula was undefined and a boundary value was returned.
    pub map_at_boundary: bool,
}

pub fn beta_point_estimates<T: Real>(p: BetaParams<T>) -> BetaEstimates<T> {
    let ba = p.alpha / (p.alpha + p.beta);
    let interior = p.alpha > T::one() && p.beta > T::one();
    let (map, map_at_boundary) = if interior {
        (
            (p.alpha - T::one()) / (p.alpha + p.beta - T::lit(2.0)),
            false,
        )
    } else if p.alpha <= T::one() && p.beta <= T::one() {
        (T::lit(0.5), true)
    } else if p.alpha <= T::one() {
        (T::zero(), true)
    } else {
        (T::one(), true)
    };
    BetaEstimates {
        ba,
        map,
        map_at_boundary,
    }
}

/// Gaussian prior/posterior (known-variance likelihood).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams<T> {
    pub mean: T,
    pub var: T,
}

impl<T: Real> GaussianParams<T> {
    pub fn new(mean: T, var: T) -> Result<Self> {
        if var <= T::zero() {
            return Err(Error::InvalidParameter(
                "Gaussian variance must be > 0".into(),
            ));
        }
        Ok(Self { mean, var })
    }
}

/// Single-observation conjugate update: the posterior mean is the
/// variance-weighted average of the prior mean and the observation.
pub fn gaussian_update<T: Real>(
    prior: GaussianParams<T>,
    likelihood_var: T,
    x: T,
) -> Result<GaussianParams<T>> {
    if likelihood_var <= T::zero() {
        return Err(Error::InvalidParameter(
            "likelihood variance must be > 0".into(),
        ));
    }
    let denom = prior.var + likelihood_var;
    Ok(GaussianParams {
        mean: (likelihood_var * prior.mean + prior.var * x) / denom,
        var: prior.var * likelihood_var / denom,
    })
}

/// The four estimators for the support of `U[0, θ]`.
#[derive(Clone, Copy, Debug)]
pub struct UniformSupportEstimates<T> {
    /// Sample maximum.
    pub max: T,
    /// Bias-corrected maximum `(n+1)/n · max`.
    pub unbiased_max: T,
    /// Doubled sample mean.
    pub midpoint: T,
    /// MSE-optimal rescaled maximum `(n+2)/(n+1) · max`.
    pub mse_optimal: T,
}

pub fn uniform_support_estimators<T: Real>(samples: &[T]) -> Result<UniformSupportEstimates<T>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if samples.iter().any(|&x| x < T::zero()) {
        return Err(Error::InvalidParameter("samples must be >= 0".into()));
    }
    let n = T::of(samples.len());
    let max = samples.iter().cloned().fold(T::zero(), T::max);
    let mean = samples.iter().cloned().sum::<T>() / n;
    Ok(UniformSupportEstimates {
        max,
        unbiased_max: (n + T::one()) / n * max,
        midpoint: T::lit(2.0) * mean,
        mse_optimal: (n + T::lit(2.0)) / (n + T::one()) * max,
    })
}

/// Exact MSE of the rescaled-maximum estimator `a·max(X)` for `U[0, θ]`
/// samples, from the order statistics `E[max] = nθ/(n+1)`,
/// `E[max²] = nθ²/(n+2)`.
pub fn uniform_scaled_max_mse<T: Real>(a: T, n: usize, theta: T) -> T {
    let nf = T::of(n);
    theta
        * theta
        * (a * a * nf / (nf + T::lit(2.0)) - T::lit(2.0) * a * nf / (nf + T::one()) + T::one())
}

/// Monte-Carlo estimate of an estimator's risk at a fixed true parameter.
#[derive(Clone, Copy, Debug)]
pub struct RiskEstimate<T> {
    pub mse: T,
    pub mse_se: T,
    pub bias: T,
    pub bias_se: T,
    pub var: T,
    pub var_se: T,
    pub trials: usize,
}

/// Sample `trials` data sets of size `n` from `sampler`, apply `estimator`,
/// and report MSE / bias / variance with standard errors.
///
/// Trial seeds derive from `(seed, trial index)`, so the result is bit-stable
/// under any worker count.
pub fn estimator_risk_mc<T, S, E>(
    sampler: S,
    estimator: E,
    theta0: T,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<RiskEstimate<T>>
where
    T: Real,
    S: Fn(&mut rand_chacha::ChaCha12Rng, usize) -> Vec<T> + Sync,
    E: Fn(&[T]) -> T + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let estimates: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            let data = sampler(&mut rng, n);
            estimator(&data)
        })
        .collect();
    let sq_errors: Vec<T> = estimates
        .iter()
        .map(|&e| (e - theta0) * (e - theta0))
        .collect();
    let (mse, mse_var) = mean_var(&sq_errors);
    let (mean_est, var) = mean_var(&estimates);
    let tf = T::of(trials);
    // moment-based standard error of the sample variance:
    //   Var(s²) ≈ (m4 − (T−3)/(T−1) s⁴)/T
    let m4 = estimates
        .iter()
        .map(|&e| {
            let d = e - mean_est;
            d * d * d * d
        })
        .sum::<T>()
        / tf;
    let var_se = if trials > 3 {
        ((m4 - var * var * (tf - T::lit(3.0)) / (tf - T::one())) / tf)
            .max(T::zero())
            .sqrt()
    } else {
        var
    };
    Ok(RiskEstimate {
        mse,
        mse_se: (mse_var / tf).sqrt(),
        bias: mean_est - theta0,
        bias_se: (var / tf).sqrt(),
        var,
        var_se,
        trials,
    })
}

/// Draw `n` i.i.d. Bernoulli(p) outcomes as 0.0/1.0 values.
pub fn bernoulli_sampler<T: Real>(
    p: T,
) -> impl Fn(&mut rand_chacha::ChaCha12Rng, usize) -> Vec<T> + Sync {
    move |rng, n| {
        (0..n)
            .map(|_| {
                if sample_unit::<T>(rng) < p {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}

/// Draw `n` i.i.d. `U[0, θ]` samples.
pub fn uniform_sampler<T: Real>(
    theta: T,
) -> impl Fn(&mut rand_chacha::ChaCha12Rng, usize) -> Vec<T> + Sync {
    move |rng, n| (0..n).map(|_| theta * sample_unit::<T>(rng)).collect()
}

/// Standard normal via Box–Muller (deterministic for a fixed stream).
pub fn normal_sample<T: Real>(rng: &mut impl Rng) -> T {
    let u1: T = sample_unit(rng);
    let u2: T = sample_unit(rng);
    let r = (-T::lit(2.0) * (T::one() - u1).ln()).sqrt();
    r * (T::lit(2.0) * T::PI() * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_update_examples() {
        let flat = BetaParams::<f64>::flat();
        let post = beta_update(flat, 1, 2).unwrap();
        assert_eq!(
            post,
            BetaParams {
                alpha: 2.0,
                beta: 2.0
            }
        );
        assert_abs_diff_eq!(post.normalization(), 1.0 / 6.0, epsilon = 1e-13);
        // n = 0 leaves the prior unchanged
        assert_eq!(beta_update(flat, 0, 0).unwrap(), flat);
        // prior (3,2), k=4, n=15 → (7,13), BA = 0.35
        let p = beta_update(BetaParams::new(3.0, 2.0).unwrap(), 4, 15).unwrap();
        assert_eq!(
            p,
            BetaParams {
                alpha: 7.0,
                beta: 13.0
            }
        );
        let est = beta_point_estimates(p);
        assert_abs_diff_eq!(est.ba, 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(est.map, 1.0 / 3.0, epsilon = 1e-15);
        assert!(!est.map_at_boundary);
        // k > n rejected
        assert!(beta_update(flat, 3, 2).is_err());
    }

    #[test]
    fn beta_estimates_boundary_flags() {
        let sym = beta_point_estimates(BetaParams::new(2.0f64, 2.0).unwrap());
        assert_abs_diff_eq!(sym.ba, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sym.map, 0.5, epsilon = 1e-15);
        let lo = beta_point_estimates(BetaParams::new(1.0f64, 3.0).unwrap());
        assert!(lo.map_at_boundary);
        assert_eq!(lo.map, 0.0);
        let hi = beta_point_estimates(BetaParams::new(3.0f64, 1.0).unwrap());
        assert!(hi.map_at_boundary);
        assert_eq!(hi.map, 1.0);
    }

    #[test]
    fn beta_update_batches() {
        let prior = BetaParams::new(1.5f64, 2.5).unwrap();
        let two_step = beta_update(beta_update(prior, 3, 7).unwrap(), 2, 4).unwrap();
        let one_step = beta_update(prior, 5, 11).unwrap();
        assert_eq!(two_step, one_step);
    }

    #[test]
    fn beta_flat_prior_bmse_monte_carlo() {
        // BMSE of the BA under a flat prior with n = 2: 1/(6(n+2)) = 1/24
        let trials = 200_000usize;
        let n = 2usize;
        let errs: Vec<f64> = (0..trials)
            .map(|i| {
                let mut rng = task_rng(2024, i as u64);
                let theta: f64 = sample_unit(&mut rng);
                let mut k = 0usize;
                for _ in 0..n {
                    if sample_unit::<f64>(&mut rng) < theta {
                        k += 1;
                    }
                }
                let ba = (1.0 + k as f64) / (2.0 + n as f64);
                (ba - theta) * (ba - theta)
            })
            .collect();
        let (bmse, var) = mean_var(&errs);
        let se = (var / trials as f64).sqrt();
        assert!(
            (bmse - 1.0 / 24.0).abs() < 3.0 * se,
            "bmse {bmse} vs 1/24, se {se}"
        );
    }

    #[test]
    fn gaussian_update_limits() {
        let prior = GaussianParams::new(0.3f64, 2.0).unwrap();
        // σ → 0: posterior mean → x
        let tight = gaussian_update(prior, 1e-12, 1.7).unwrap();
        assert_abs_diff_eq!(tight.mean, 1.7, epsilon = 1e-9);
        // σ_p → ∞: posterior mean → x, var → σ²
        let vague = gaussian_update(GaussianParams::new(0.0, 1e12).unwrap(), 0.5, 1.7).unwrap();
        assert_abs_diff_eq!(vague.mean, 1.7, epsilon = 1e-9);
        assert_abs_diff_eq!(vague.var, 0.5, epsilon = 1e-9);
        // posterior variance below both inputs
        let post = gaussian_update(prior, 1.0, 0.0).unwrap();
        assert!(post.var < prior.var && post.var < 1.0);
        assert!(gaussian_update(prior, 0.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_single_shot_bmse_saturates_bound() {
        // BMSE of the posterior mean = σ_p²σ²/(σ_p²+σ²)
        let (sp2, s2) = (1.5f64, 0.7f64);
        let want = sp2 * s2 / (sp2 + s2);
        let trials = 200_000usize;
        let errs: Vec<f64> = (0..trials)
            .map(|i| {
                let mut rng = task_rng(77, i as u64);
                let mu = sp2.sqrt() * normal_sample::<f64>(&mut rng);
                let x = mu + s2.sqrt() * normal_sample::<f64>(&mut rng);
                let prior = GaussianParams::new(0.0, sp2).unwrap();
                let post = gaussian_update(prior, s2, x).unwrap();
                (post.mean - mu) * (post.mean - mu)
            })
            .collect();
        let (bmse, var) = mean_var(&errs);
        let se = (var / trials as f64).sqrt();
        assert!(
            (bmse - want).abs() < 3.0 * se,
            "bmse {bmse} vs {want}, se {se}"
        );
    }

    #[test]
    fn uniform_estimator_formulas() {
        let est = uniform_support_estimators(&[0.2f64, 0.5, 0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(est.max, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(est.unbiased_max, 0.9 * 5.0 / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(est.midpoint, 2.0 * 1.7 / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(est.mse_optimal, 0.9 * 6.0 / 5.0, epsilon = 1e-15);
        assert!(uniform_support_estimators::<f64>(&[]).is_err());
    }

    #[test]
    fn uniform_estimator_risks() {
        let theta = 1.0f64;
        for n in [5usize, 20] {
            // bias of the raw maximum → −θ/(n+1)
            let risk = estimator_risk_mc(
                uniform_sampler(theta),
                |d: &[f64]| uniform_support_estimators(d).unwrap().max,
                theta,
                n,
                60_000,
                11,
            )
            .unwrap();
            let want = -theta / (n as f64 + 1.0);
            assert!(
                (risk.bias - want).abs() < 3.0 * risk.bias_se,
                "bias {} vs {want}",
                risk.bias
            );

            // variance of the corrected maximum → θ²/(n(n+2))
            let risk2 = estimator_risk_mc(
                uniform_sampler(theta),
                |d: &[f64]| uniform_support_estimators(d).unwrap().unbiased_max,
                theta,
                n,
                60_000,
                12,
            )
            .unwrap();
            let want2 = theta * theta / (n as f64 * (n as f64 + 2.0));
            assert!((risk2.var - want2).abs() < 3.0 * risk2.var_se);
        }
        // exact MSE ordering at n = 10: the (n+2)/(n+1) rescaling beats the
        // unbiased estimator
        let n = 10usize;
        let mse_opt = uniform_scaled_max_mse((n as f64 + 2.0) / (n as f64 + 1.0), n, theta);
        let mse_unb = uniform_scaled_max_mse((n as f64 + 1.0) / n as f64, n, theta);
        assert!(mse_opt < mse_unb);
        assert_abs_diff_eq!(
            mse_unb,
            theta * theta / (n as f64 * (n as f64 + 2.0)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn risk_mc_bernoulli_and_constant() {
        let theta = 0.3f64;
        let n = 50usize;
        let risk = estimator_risk_mc(
            bernoulli_sampler(theta),
            |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64,
            theta,
            n,
            50_000,
            5,
        )
        .unwrap();
        let want = theta * (1.0 - theta) / n as f64;
        assert!((risk.mse - want).abs() < 3.0 * risk.mse_se);

        // constant estimator: mse = (c − θ)² exactly, zero variance
        let c = 0.9f64;
        let risk =
            estimator_risk_mc(bernoulli_sampler(theta), |_d: &[f64]| c, theta, n, 100, 6).unwrap();
        assert_abs_diff_eq!(risk.mse, (c - theta) * (c - theta), epsilon = 1e-14);
        assert_abs_diff_eq!(risk.var, 0.0, epsilon = 1e-14);

        // decomposition: mse = (T−1)/T·var + bias² exactly on sample statistics
        let risk = estimator_risk_mc(
            bernoulli_sampler(theta),
            |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64 + 0.02,
            theta,
            n,
            10_000,
            7,
        )
        .unwrap();
        let t = risk.trials as f64;
        let lhs = risk.mse;
        let rhs = (t - 1.0) / t * risk.var + risk.bias * risk.bias;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn risk_mc_is_worker_count_independent() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                estimator_risk_mc(
                    bernoulli_sampler(0.4f64),
                    |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64,
                    0.4,
                    20,
                    5_000,
                    99,
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mse.to_bits(), b.mse.to_bits());
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
        assert_eq!(a.var.to_bits(), b.var.to_bits());
    }
}
