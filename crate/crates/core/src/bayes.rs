//! Grid-based sequential Bayesian inference for temperature.
//!
//! The temperature axis is discretized into `N_T` uniform points; the prior
//! and posterior live as probability weights on that grid, and outcome
//! strings enter through a running log-likelihood ledger that is max-shifted
//! before exponentiation so that arbitrarily long records stay stable.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{exp_i0, mean_var, sample_unit, task_rng};
use crate::qfi::{classical_fi, Pmf};
use crate::real::Real;

/// Uniform grid on `[t_min, t_max]`, endpoints included.
#[derive(Clone, Debug)]
pub struct TemperatureGrid<T> {
    t_min: T,
    t_max: T,
    points: Vec<T>,
}

impl<T: Real> TemperatureGrid<T> {
    pub fn new(t_min: T, t_max: T, n_points: usize) -> Result<Self> {
        if !(T::zero() < t_min && t_min < t_max) {
            return Err(Error::InvalidParameter("need 0 < t_min < t_max".into()));
        }
        if n_points < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 grid points".into(),
            ));
        }
        let step = (t_max - t_min) / T::of(n_points - 1);
        let points = (0..n_points).map(|k| t_min + step * T::of(k)).collect();
        Ok(Self {
            t_min,
            t_max,
            points,
        })
    }

    /// Symmetric interval `[t0 − δ, t0 + δ]`.
    pub fn symmetric(t0: T, delta: T, n_points: usize) -> Result<Self> {
        Self::new(t0 - delta, t0 + delta, n_points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn t_min(&self) -> T {
        self.t_min
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    /// Grid spacing ΔT.
    pub fn spacing(&self) -> T {
        (self.t_max - self.t_min) / T::of(self.points.len() - 1)
    }
}

/// Near-flat prior shape on `[0, 1]`:
/// `λ_α(θ) = (e^{α sin²(πθ)} − 1) / (e^{α/2} I₀(α/2) − 1)`.
/// Vanishes at both endpoints; flat-like for large negative `α`.
pub fn lambda_alpha<T: Real>(theta: T, alpha: T) -> T {
    let num = (alpha * (T::PI() * theta).sin().powi(2)).exp_m1();
    let den = exp_i0(alpha * T::lit(0.5)) - T::one();
    num / den
}

/// Prior families supported on the grid.
#[derive(Clone, Debug)]
pub enum PriorFamily<T> {
    /// The λ_α family mapped onto the grid support; `α ≠ 0`.
    LambdaAlpha(T),
    /// Uniform weights.
    Flat,
    /// Explicit density table (one value per grid point, any scale).
    Custom(Vec<T>),
}

#[derive(Clone, Debug)]
pub struct PriorSpec<T> {
    pub family: PriorFamily<T>,
}

impl<T: Real> PriorSpec<T> {
    pub fn lambda_alpha(alpha: T) -> Self {
        Self {
            family: PriorFamily::LambdaAlpha(alpha),
        }
    }

    pub fn flat() -> Self {
        Self {
            family: PriorFamily::Flat,
        }
    }
}

/// Discretize a prior into probability weights on the grid (sum exactly 1).
pub fn prior_evaluate<T: Real>(spec: &PriorSpec<T>, grid: &TemperatureGrid<T>) -> Result<Vec<T>> {
    let n = grid.len();
    let mut w: Vec<T> = match &spec.family {
        PriorFamily::LambdaAlpha(alpha) => {
            if *alpha == T::zero() {
                return Err(Error::InvalidParameter(
                    "lambda-alpha prior undefined at alpha = 0; use the flat family".into(),
                ));
            }
            let width = grid.t_max() - grid.t_min();
            grid.points()
                .iter()
                .map(|&t| lambda_alpha((t - grid.t_min()) / width, *alpha) / width)
                .collect()
        }
        PriorFamily::Flat => vec![T::one(); n],
        PriorFamily::Custom(d) => {
            if d.len() != n {
                return Err(Error::DimensionMismatch(
                    "custom prior table vs grid".into(),
                ));
            }
            d.clone()
        }
    };
    if w.iter().any(|&x| x < T::zero() || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "prior density must be finite and >= 0".into(),
        ));
    }
    let total: T = w.iter().cloned().sum();
    if total <= T::zero() {
        return Err(Error::InvalidParameter("prior density sums to zero".into()));
    }
    for x in &mut w {
        *x = *x / total;
    }
    Ok(w)
}

/// Point estimates extracted from a posterior.
#[derive(Clone, Copy, Debug)]
pub struct PointEstimates<T> {
    /// Posterior mean (Bayesian average).
    pub ba: T,
    /// Posterior mode; ties break toward the lowest temperature index.
    pub map: T,
    /// Smallest grid point with CDF ≥ 1/2.
    pub median: T,
    /// Posterior variance.
    pub variance: T,
}

/// Discretized posterior state: grid, log-likelihood ledger, prior and
/// posterior weights.
#[derive(Clone, Debug)]
pub struct PosteriorGrid<T> {
    grid: TemperatureGrid<T>,
    log_lik: Vec<T>,
    prior: Vec<T>,
    posterior: Vec<T>,
    n_seen: usize,
}

impl<T: Real> PosteriorGrid<T> {
    pub fn new(grid: TemperatureGrid<T>, prior: Vec<T>) -> Result<Self> {
        if prior.len() != grid.len() {
            return Err(Error::DimensionMismatch("prior weights vs grid".into()));
        }
        let total: T = prior.iter().cloned().sum();
        if (total - T::one()).abs() > T::lit(1e-8) {
            return Err(Error::InvalidParameter(format!(
                "prior weights sum to {total}, not 1"
            )));
        }
        let n = grid.len();
        Ok(Self {
            grid,
            log_lik: vec![T::zero(); n],
            prior: prior.clone(),
            posterior: prior,
            n_seen: 0,
        })
    }

    pub fn grid(&self) -> &TemperatureGrid<T> {
        &self.grid
    }

    pub fn posterior(&self) -> &[T] {
        &self.posterior
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    pub fn log_lik(&self) -> &[T] {
        &self.log_lik
    }

    pub fn n_seen(&self) -> usize {
        self.n_seen
    }

    fn add_log_lik(&mut self, x: u8, lik: &impl Fn(u8, T) -> T) -> Result<()> {
        let mut any_positive = false;
        for (l, &t) in self.log_lik.iter_mut().zip(self.grid.points()) {
            let p = lik(x, t);
            if p < T::zero() || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "likelihood {p} at T = {t}"
                )));
            }
            if p > T::zero() {
                any_positive = true;
                *l = *l + p.ln();
            } else {
                *l = T::neg_infinity();
            }
        }
        if !any_positive {
            return Err(Error::InvalidParameter(
                "likelihood vanishes on the whole grid".into(),
            ));
        }
        self.n_seen += 1;
        Ok(())
    }

    /// Rebuild the posterior from the ledger: `P_{k|n} ∝ e^{L_k − L_max} P_k`.
    fn refresh(&mut self) {
        let lmax = self.log_lik.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for ((p, &l), &pk) in self
            .posterior
            .iter_mut()
            .zip(&self.log_lik)
            .zip(&self.prior)
        {
            let v = if l.is_finite() {
                (l - lmax).exp() * pk
            } else {
                T::zero()
            };
            *p = v;
            total = total + v;
        }
        for p in &mut self.posterior {
            *p = *p / total;
        }
    }

    /// Fold in one outcome.
    pub fn update(&mut self, x: u8, lik: &impl Fn(u8, T) -> T) -> Result<()> {
        self.add_log_lik(x, lik)?;
        self.refresh();
        Ok(())
    }

    /// Fold in a batch of outcomes; identical (bit for bit) to calling
    /// [`PosteriorGrid::update`] once per outcome.
    pub fn update_batch(&mut self, xs: &[u8], lik: &impl Fn(u8, T) -> T) -> Result<()> {
        for &x in xs {
            self.add_log_lik(x, lik)?;
        }
        self.refresh();
        Ok(())
    }

    /// Markov-1 mode for correlated records: the likelihood provider also
    /// sees the previous outcome (`None` for the first one), so nearest
    /// -neighbor conditionals such as
    /// [`crate::collisional::markov1_likelihood`] plug in directly.
    pub fn update_batch_markov1(
        &mut self,
        xs: &[u8],
        lik: &impl Fn(u8, Option<u8>, T) -> T,
    ) -> Result<()> {
        let mut prev: Option<u8> = None;
        for &x in xs {
            self.add_log_lik(x, &|xi, t| lik(xi, prev, t))?;
            prev = Some(x);
        }
        self.refresh();
        Ok(())
    }

    pub fn point_estimates(&self) -> PointEstimates<T> {
        let pts = self.grid.points();
        let mut ba = T::zero();
        let mut second = T::zero();
        let mut best = T::neg_infinity();
        let mut map = pts[0];
        let mut cdf = T::zero();
        let mut median = pts[pts.len() - 1];
        let mut median_found = false;
        let half = T::lit(0.5);
        for (k, (&w, &t)) in self.posterior.iter().zip(pts).enumerate() {
            ba = ba + t * w;
            second = second + t * t * w;
            if w > best {
                best = w;
                map = pts[k];
            }
            cdf = cdf + w;
            if !median_found && cdf >= half {
                median = t;
                median_found = true;
            }
        }
        PointEstimates {
            ba,
            map,
            median,
            variance: second - ba * ba,
        }
    }
}

/// Tabulated binary-outcome model on a grid: log-likelihoods of both outcomes
/// and the click probability at every grid point.
#[derive(Clone, Debug)]
pub struct GridModel<T> {
    pub p1: Vec<T>,
    pub ln_p1: Vec<T>,
    pub ln_p0: Vec<T>,
}

impl<T: Real> GridModel<T> {
    pub fn tabulate(grid: &TemperatureGrid<T>, model: impl Fn(u8, T) -> T) -> Result<Self> {
        let mut p1 = Vec::with_capacity(grid.len());
        for &t in grid.points() {
            let p = model(1, t);
            if !(T::zero()..=T::one()).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "click probability {p} at T = {t}"
                )));
            }
            p1.push(p);
        }
        let ln_p1 = p1.iter().map(|&p| p.ln()).collect();
        let ln_p0 = p1.iter().map(|&p| (T::one() - p).ln()).collect();
        Ok(Self { p1, ln_p1, ln_p0 })
    }
}

/// Posterior weights after observing `k1` clicks in `n` outcomes (the count
/// is sufficient for i.i.d. binary models).
fn posterior_from_counts<T: Real>(
    prior: &[T],
    model: &GridModel<T>,
    k1: usize,
    n: usize,
    out: &mut [T],
) {
    let k1f = T::of(k1);
    let k0f = T::of(n - k1);
    let mut lmax = T::neg_infinity();
    for i in 0..prior.len() {
        let l = k1f * model.ln_p1[i] + k0f * model.ln_p0[i];
        out[i] = l;
        if l > lmax {
            lmax = l;
        }
    }
    let mut total = T::zero();
    for (o, &pk) in out.iter_mut().zip(prior) {
        let v = if o.is_finite() {
            (*o - lmax).exp() * pk
        } else {
            T::zero()
        };
        *o = v;
        total = total + v;
    }
    for o in out.iter_mut() {
        *o = *o / total;
    }
}

fn ba_of<T: Real>(weights: &[T], pts: &[T]) -> T {
    weights.iter().zip(pts).map(|(&w, &t)| w * t).sum()
}

/// One point of a Monte-Carlo risk curve.
#[derive(Clone, Copy, Debug)]
pub struct RiskCurvePoint<T> {
    pub n: usize,
    pub value: T,
    pub se: T,
}

fn risk_curve<T: Real>(per_trial: Vec<Vec<T>>, checkpoints: &[usize]) -> Vec<RiskCurvePoint<T>> {
    let trials = per_trial.len();
    checkpoints
        .iter()
        .enumerate()
        .map(|(ci, &n)| {
            let errs: Vec<T> = per_trial.iter().map(|row| row[ci]).collect();
            let (mean, var) = mean_var(&errs);
            RiskCurvePoint {
                n,
                value: mean,
                se: (var / T::of(trials)).sqrt(),
            }
        })
        .collect()
}

/// Frequentist MSE of the Bayesian-average estimator at a fixed true
/// temperature, sampled over `trials` outcome strings. `gen_p1` is the click
/// probability used to generate data (it may deliberately differ from the
/// inference model to study systematic errors).
pub fn mse_monte_carlo<T: Real>(
    t0: T,
    gen_p1: T,
    checkpoints: &[usize],
    trials: usize,
    model: &GridModel<T>,
    prior: &[T],
    grid: &TemperatureGrid<T>,
    seed: u64,
) -> Result<Vec<RiskCurvePoint<T>>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let nmax = checkpoints.iter().copied().max().unwrap_or(0);
    let per_trial: Vec<Vec<T>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = task_rng(seed, trial as u64);
            let mut weights = vec![T::zero(); grid.len()];
            let mut row = Vec::with_capacity(checkpoints.len());
            let mut k1 = 0usize;
            let mut drawn = 0usize;
            for &n in checkpoints {
                while drawn < n.min(nmax) {
                    if sample_unit::<T>(&mut rng) < gen_p1 {
                        k1 += 1;
                    }
                    drawn += 1;
                }
                posterior_from_counts(prior, model, k1, drawn, &mut weights);
                let ba = ba_of(&weights, grid.points());
                row.push((ba - t0) * (ba - t0));
            }
            row
        })
        .collect();
    Ok(risk_curve(per_trial, checkpoints))
}

/// Bayesian MSE: as [`mse_monte_carlo`] but with the true temperature drawn
/// from the prior for every trial.
pub fn bmse_monte_carlo<T: Real>(
    checkpoints: &[usize],
    trials: usize,
    model: &GridModel<T>,
    prior: &[T],
    grid: &TemperatureGrid<T>,
    seed: u64,
) -> Result<Vec<RiskCurvePoint<T>>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let nmax = checkpoints.iter().copied().max().unwrap_or(0);
    let per_trial: Vec<Vec<T>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = task_rng(seed, trial as u64);
            // inverse-CDF draw of the true temperature from the prior weights
            let u: T = sample_unit(&mut rng);
            let mut acc = T::zero();
            let mut idx = prior.len() - 1;
            for (k, &w) in prior.iter().enumerate() {
                acc = acc + w;
                if u < acc {
                    idx = k;
                    break;
                }
            }
            let t0 = grid.points()[idx];
            let gen_p1 = model.p1[idx];
            let mut weights = vec![T::zero(); grid.len()];
            let mut row = Vec::with_capacity(checkpoints.len());
            let mut k1 = 0usize;
            let mut drawn = 0usize;
            for &n in checkpoints {
                while drawn < n.min(nmax) {
                    if sample_unit::<T>(&mut rng) < gen_p1 {
                        k1 += 1;
                    }
                    drawn += 1;
                }
                posterior_from_counts(prior, model, k1, drawn, &mut weights);
                let ba = ba_of(&weights, grid.points());
                row.push((ba - t0) * (ba - t0));
            }
            row
        })
        .collect();
    Ok(risk_curve(per_trial, checkpoints))
}

/// Classical and Bayesian bounds evaluated on the grid.
#[derive(Clone, Debug)]
pub struct Bounds<T> {
    /// Pointwise Cramér–Rao bound `1/(n F(T_k))`.
    pub crb: Vec<T>,
    /// Van Trees bound `1/(n E_P[F] + F_p)`.
    pub vtsb: T,
    /// Asymptotic Bayesian risk `E_P[1/(n F)]`.
    pub asymptotic_bmse: T,
    /// Prior-averaged Fisher information.
    pub mean_fisher: T,
    /// Fisher information of the prior.
    pub prior_fisher: T,
}

/// Tabulate the Fisher information of a two-outcome model over the grid,
/// using central differences with step `Δgrid/10`.
pub fn fisher_on_grid<T: Real>(pmf: &Pmf<T>, grid: &TemperatureGrid<T>) -> Result<Vec<T>> {
    let h = grid.spacing() * T::lit(0.1);
    grid.points()
        .iter()
        .map(|&t| classical_fi(pmf, t, h))
        .collect()
}

/// Bounds from precomputed Fisher-information values.
pub fn bounds_from_fisher<T: Real>(
    prior: &[T],
    fisher: &[T],
    grid: &TemperatureGrid<T>,
    n: usize,
) -> Result<Bounds<T>> {
    if prior.len() != grid.len() || fisher.len() != grid.len() {
        return Err(Error::DimensionMismatch(
            "bounds: table lengths vs grid".into(),
        ));
    }
    let nf = T::of(n.max(1));
    let crb: Vec<T> = fisher
        .iter()
        .map(|&f| {
            if f > T::zero() {
                T::one() / (nf * f)
            } else {
                T::infinity()
            }
        })
        .collect();
    let mean_fisher: T = prior.iter().zip(fisher).map(|(&w, &f)| w * f).sum();
    // prior Fisher information from the density on the interior grid,
    // amputating points where the density vanishes
    let delta = grid.spacing();
    let cutoff = T::lit(1e-12);
    let mut prior_fisher = T::zero();
    for k in 1..grid.len() - 1 {
        let d = prior[k] / delta;
        if d < cutoff {
            continue;
        }
        let dd = (prior[k + 1] - prior[k - 1]) / (T::lit(2.0) * delta * delta);
        prior_fisher = prior_fisher + dd * dd / d * delta;
    }
    let vtsb = T::one() / (nf * mean_fisher + prior_fisher);
    let mut asymptotic = T::zero();
    for (&w, &f) in prior.iter().zip(fisher) {
        if w < cutoff {
            continue;
        }
        if f <= T::zero() {
            asymptotic = T::infinity();
            break;
        }
        asymptotic = asymptotic + w / (nf * f);
    }
    Ok(Bounds {
        crb,
        vtsb,
        asymptotic_bmse: asymptotic,
        mean_fisher,
        prior_fisher,
    })
}

/// Bounds computed from the model itself.
pub fn bounds<T: Real>(
    prior: &[T],
    pmf: &Pmf<T>,
    grid: &TemperatureGrid<T>,
    n: usize,
) -> Result<Bounds<T>> {
    let fisher = fisher_on_grid(pmf, grid)?;
    bounds_from_fisher(prior, &fisher, grid, n)
}

/// One cell of a coupling sweep.
#[derive(Clone, Copy, Debug)]
pub struct CouplingCell<T> {
    pub g_tau_sa: T,
    pub gamma_tau_se: T,
    /// `E_P[1/F]`, the asymptotic Bayesian risk per outcome.
    pub e_inv_f: T,
}

/// Sweep result: the full table plus, per system–probe coupling, the
/// bath coupling minimizing `E_P[1/F]`.
#[derive(Clone, Debug)]
pub struct CouplingSweep<T> {
    pub cells: Vec<CouplingCell<T>>,
    pub argmin: Vec<(T, T, T)>,
}

/// Evaluate `E_P[1/F]` over a grid of couplings for ground-state probes.
pub fn coupling_sweep<T: Real>(
    omega: T,
    gamma_grid: &[T],
    g_grid: &[T],
    prior: &[T],
    grid: &TemperatureGrid<T>,
) -> Result<CouplingSweep<T>> {
    if gamma_grid.is_empty() || g_grid.is_empty() {
        return Err(Error::InvalidParameter("empty coupling grid".into()));
    }
    let mut cells = Vec::with_capacity(gamma_grid.len() * g_grid.len());
    let mut argmin = Vec::with_capacity(g_grid.len());
    for &g in g_grid {
        let mut best: Option<(T, T)> = None;
        let row: Vec<CouplingCell<T>> = gamma_grid
            .par_iter()
            .map(|&gamma| {
                let p = crate::collisional::CollisionalParams::new(
                    omega,
                    gamma,
                    g,
                    crate::collisional::ProbePrep::Ground,
                )
                .expect("validated sweep parameters");
                let b = bounds(prior, &p.likelihood_pmf(), grid, 1).expect("bounds on sweep grid");
                CouplingCell {
                    g_tau_sa: g,
                    gamma_tau_se: gamma,
                    e_inv_f: b.asymptotic_bmse,
                }
            })
            .collect();
        for cell in &row {
            match best {
                Some((_, v)) if v <= cell.e_inv_f => {}
                _ => best = Some((cell.gamma_tau_se, cell.e_inv_f)),
            }
        }
        let (bg, bv) = best.unwrap();
        argmin.push((g, bg, bv));
        cells.extend(row);
    }
    Ok(CouplingSweep { cells, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collisional::{CollisionalParams, ProbePrep};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn beta_grid(n: usize) -> TemperatureGrid<f64> {
        // probability-parameter grid avoiding the exact endpoints 0 and 1
        TemperatureGrid::new(1e-9, 1.0 - 1e-9, n).unwrap()
    }

    fn bernoulli(x: u8, th: f64) -> f64 {
        if x == 1 {
            th
        } else {
            1.0 - th
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TemperatureGrid::new(0.0f64, 1.0, 10).is_err());
        assert!(TemperatureGrid::new(2.0f64, 1.0, 10).is_err());
        assert!(TemperatureGrid::new(0.1f64, 1.0, 1).is_err());
        let g = TemperatureGrid::new(0.05f64, 5.0, 500).unwrap();
        assert_eq!(g.len(), 500);
        assert_abs_diff_eq!(g.points()[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(g.points()[499], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_prior_shape_and_normalization() {
        let alpha = -100.0f64;
        // endpoints vanish
        assert_abs_diff_eq!(lambda_alpha(0.0, alpha), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_alpha(1.0, alpha), 0.0, epsilon = 1e-12);
        // quadrature oracle: the continuous density integrates to 1
        let n = 200_001usize;
        let h = 1.0 / (n as f64 - 1.0);
        let mut acc = 0.0;
        for k in 0..n {
            let th = k as f64 * h;
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc += w * lambda_alpha(th, alpha) * h;
        }
        assert_abs_diff_eq!(acc, 1.0, epsilon = 1e-8);
        // flat-like: deviation from the interior mean stays small on [0.1, 0.9]
        // (the plateau level itself sits ~6% above 1 because the density must
        // compensate the vanishing endpoints)
        let vals: Vec<f64> = (0..801)
            .map(|k| lambda_alpha(0.1 + 0.001 * k as f64, alpha))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let maxdev = vals
            .iter()
            .map(|v| (v / mean - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(maxdev < 0.05, "interior flatness {maxdev}");
        assert!((mean - 1.0).abs() < 0.07);
        // discretized weights sum to one
        let grid = TemperatureGrid::new(0.05f64, 5.0, 500).unwrap();
        let w = prior_evaluate(&PriorSpec::lambda_alpha(alpha), &grid).unwrap();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[0], 0.0, epsilon = 1e-15);
        // alpha = 0 is rejected
        assert!(prior_evaluate(&PriorSpec::lambda_alpha(0.0), &grid).is_err());
    }

    #[test]
    fn bernoulli_posterior_matches_closed_form() {
        let grid = beta_grid(500);
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let mut post = PosteriorGrid::new(grid, prior).unwrap();
        post.update(1, &bernoulli).unwrap();
        post.update(0, &bernoulli).unwrap();
        // density ∝ 6θ(1−θ)
        let delta = post.grid().spacing();
        for (k, &t) in post.grid().points().iter().enumerate() {
            let density = post.posterior()[k] / delta;
            let want = 6.0 * t * (1.0 - t);
            assert!(
                (density - want).abs() < 1e-3,
                "density {density} vs {want} at {t}"
            );
        }
        // grid BA vs conjugate closed form (α₀+k)/(α₀+β₀+n)
        let est = post.point_estimates();
        assert_abs_diff_eq!(est.ba, 2.0 / 4.0, epsilon = 1e-3);
        // no outcomes: posterior equals prior
        let grid = beta_grid(100);
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let post0 = PosteriorGrid::new(grid, prior.clone()).unwrap();
        assert_eq!(post0.posterior(), &prior[..]);
    }

    #[test]
    fn batch_equals_sequential_bit_for_bit() {
        let grid = beta_grid(64);
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let bits: Vec<u8> = (0..200).map(|i| ((i * 7 + 3) % 5 < 2) as u8).collect();
        let mut seq = PosteriorGrid::new(grid.clone(), prior.clone()).unwrap();
        for &b in &bits {
            seq.update(b, &bernoulli).unwrap();
        }
        let mut bat = PosteriorGrid::new(grid, prior).unwrap();
        bat.update_batch(&bits, &bernoulli).unwrap();
        assert_eq!(seq.n_seen(), bat.n_seen());
        for (a, b) in seq.posterior().iter().zip(bat.posterior()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn long_record_stability_vs_scaled_product() {
        // 10⁴ outcomes on a coarse grid: compare the log-ledger posterior
        // against a direct product with explicit mantissa/exponent rescaling
        let grid = beta_grid(50);
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let bits: Vec<u8> = (0..10_000).map(|i| ((i * 31 + 7) % 10 < 3) as u8).collect();
        let mut post = PosteriorGrid::new(grid.clone(), prior.clone()).unwrap();
        post.update_batch(&bits, &bernoulli).unwrap();
        assert!(post.log_lik().iter().all(|l| l.is_finite()));
        assert_abs_diff_eq!(post.posterior().iter().sum::<f64>(), 1.0, epsilon = 1e-10);

        // scaled direct product oracle
        let mut mant: Vec<f64> = prior.clone();
        let mut expo = vec![0i64; grid.len()];
        for &b in &bits {
            for (k, &t) in grid.points().iter().enumerate() {
                mant[k] *= bernoulli(b, t);
                while mant[k] != 0.0 && mant[k] < 1e-150 {
                    mant[k] *= 1e150;
                    expo[k] -= 1;
                }
            }
        }
        // normalize via the largest scaled magnitude
        let log10w: Vec<f64> = mant
            .iter()
            .zip(&expo)
            .map(|(&m, &e)| {
                if m == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    m.log10() + 150.0 * e as f64
                }
            })
            .collect();
        let best = log10w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = log10w.iter().map(|&l| 10f64.powf(l - best)).collect();
        let total: f64 = unnorm.iter().sum();
        for (k, &u) in unnorm.iter().enumerate() {
            assert_abs_diff_eq!(post.posterior()[k], u / total, epsilon = 1e-9);
        }
    }

    #[test]
    fn exchangeability_on_grid() {
        let grid = beta_grid(64);
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let bits: Vec<u8> = vec![1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0];
        let mut rev = bits.clone();
        rev.reverse();
        let mut a = PosteriorGrid::new(grid.clone(), prior.clone()).unwrap();
        a.update_batch(&bits, &bernoulli).unwrap();
        let mut b = PosteriorGrid::new(grid, prior).unwrap();
        b.update_batch(&rev, &bernoulli).unwrap();
        for (x, y) in a.posterior().iter().zip(b.posterior()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn point_estimate_properties() {
        // symmetric posterior: all three estimators at the center
        let grid = TemperatureGrid::new(1.0f64, 3.0, 101).unwrap();
        let center = 2.0;
        let dens: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| (-(t - center) * (t - center) / 0.08).exp())
            .collect();
        let prior = prior_evaluate(
            &PriorSpec {
                family: PriorFamily::Custom(dens),
            },
            &grid,
        )
        .unwrap();
        let post = PosteriorGrid::new(grid, prior).unwrap();
        let est = post.point_estimates();
        assert_abs_diff_eq!(est.ba, center, epsilon = 1e-10);
        assert_abs_diff_eq!(est.map, center, epsilon = 1e-10);
        assert_abs_diff_eq!(est.median, center, epsilon = 1e-10);

        // the BA minimizes the quadratic posterior loss over a scan of centers
        let grid = beta_grid(200);
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let mut post = PosteriorGrid::new(grid, prior).unwrap();
        post.update_batch(&[1, 1, 0, 1, 0, 1, 1], &bernoulli)
            .unwrap();
        let est = post.point_estimates();
        let loss = |c: f64| -> f64 {
            post.posterior()
                .iter()
                .zip(post.grid().points())
                .map(|(&w, &t)| w * (t - c) * (t - c))
                .sum()
        };
        let at_ba = loss(est.ba);
        for &c in post.grid().points() {
            assert!(loss(c) >= at_ba - 1e-14);
        }
    }

    #[test]
    fn posterior_asymptotic_variance() {
        // Bernstein–von Mises: posterior variance ≈ 1/(nF(T0)) at large n
        let omega = 1.0;
        let p = CollisionalParams::new(omega, 0.4, FRAC_PI_2, ProbePrep::<f64>::Ground).unwrap();
        let grid = TemperatureGrid::new(0.05f64, 5.0, 500).unwrap();
        let prior = prior_evaluate(&PriorSpec::lambda_alpha(-100.0), &grid).unwrap();
        let model = GridModel::tabulate(&grid, |x, t| {
            crate::collisional::likelihood(x, t, &p).unwrap()
        })
        .unwrap();
        let t0 = 1.5;
        let n = 2000usize;
        let gen_p1 = crate::collisional::likelihood(1, t0, &p).unwrap();
        let mut rng = task_rng(7, 0);
        let mut k1 = 0usize;
        for _ in 0..n {
            if sample_unit::<f64>(&mut rng) < gen_p1 {
                k1 += 1;
            }
        }
        let mut w = vec![0.0; grid.len()];
        posterior_from_counts(&prior, &model, k1, n, &mut w);
        let ba = ba_of(&w, grid.points());
        let var: f64 = w
            .iter()
            .zip(grid.points())
            .map(|(&wk, &t)| wk * (t - ba) * (t - ba))
            .sum();
        let fi = classical_fi(&p.likelihood_pmf(), t0, 1e-5).unwrap();
        let want = 1.0 / (n as f64 * fi);
        assert!(
            (var / want - 1.0).abs() < 0.15,
            "posterior var {var} vs {want}"
        );
    }

    #[test]
    fn mse_driver_baseline_and_bounds() {
        let grid = beta_grid(200);
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let model = GridModel::tabulate(&grid, |x, t| bernoulli(x, t)).unwrap();
        let t0 = 0.3;
        let curve = mse_monte_carlo(t0, t0, &[0, 400], 200, &model, &prior, &grid, 3).unwrap();
        // n = 0: every trajectory reports the prior BA
        let prior_ba = ba_of(&prior, grid.points());
        assert_abs_diff_eq!(
            curve[0].value,
            (prior_ba - t0) * (prior_ba - t0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(curve[0].se, 0.0, epsilon = 1e-15);
        // large n: MSE·nF within a loose window (tight version in acceptance)
        let fi = 1.0 / (t0 * (1.0 - t0));
        let scaled = curve[1].value * 400.0 * fi;
        assert!(scaled > 0.6 && scaled < 1.6, "MSE·nF = {scaled}");
        // CRB ordering: observed MSE within 3σ above the bound
        let b = bounds(
            &prior,
            &Pmf::new(2, |x, th| bernoulli(x as u8, th)),
            &grid,
            400,
        )
        .unwrap();
        let k = grid
            .points()
            .iter()
            .position(|&t| (t - t0).abs() < 2e-3)
            .unwrap();
        assert!(curve[1].value + 3.0 * curve[1].se >= b.crb[k]);
    }

    #[test]
    fn gaussian_location_model_bounds() {
        // Constant Fisher information 1/σ² and a discretized Gaussian prior of
        // variance σ_p²: the VTSB at n = 1 reproduces σ_p²σ²/(σ_p² + σ²).
        let (sp2, s2) = (1.5f64, 0.7f64);
        let center = 12.0;
        let grid = TemperatureGrid::new(center - 10.0, center + 10.0, 4001).unwrap();
        let dens: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| (-(t - center) * (t - center) / (2.0 * sp2)).exp())
            .collect();
        let prior = prior_evaluate(
            &PriorSpec {
                family: PriorFamily::Custom(dens),
            },
            &grid,
        )
        .unwrap();
        let fisher = vec![1.0 / s2; grid.len()];
        let b = bounds_from_fisher(&prior, &fisher, &grid, 1).unwrap();
        assert_abs_diff_eq!(b.prior_fisher, 1.0 / sp2, epsilon = 1e-4);
        let want = sp2 * s2 / (sp2 + s2);
        assert_abs_diff_eq!(b.vtsb, want, epsilon = 1e-4);
        // constant F: asymptotic BMSE equals 1/(nE[F]); the VTSB approaches it
        // as the prior term becomes negligible
        assert_abs_diff_eq!(b.asymptotic_bmse, s2, epsilon = 1e-6);
        let b1000 = bounds_from_fisher(&prior, &fisher, &grid, 1000).unwrap();
        assert!((b1000.asymptotic_bmse / b1000.vtsb - 1.0).abs() < 1e-3);
        // Jensen: E[1/F] ≥ 1/E[F] always (equality for constant F)
        assert!(b.asymptotic_bmse * b.mean_fisher >= 1.0 - 1e-6);
    }

    #[test]
    fn fisher_step_sensitivity() {
        // E_P[1/F] computed with h = Δ/10 vs a 5x finer step: small relative shift
        let p = CollisionalParams::new(1.0, 0.4, FRAC_PI_2, ProbePrep::<f64>::Ground).unwrap();
        let grid = TemperatureGrid::new(0.05f64, 5.0, 200).unwrap();
        let prior = prior_evaluate(&PriorSpec::lambda_alpha(-100.0), &grid).unwrap();
        let pmf = p.likelihood_pmf();
        let coarse = bounds(&prior, &pmf, &grid, 1).unwrap().asymptotic_bmse;
        let h = grid.spacing() * 0.02;
        let fisher: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| classical_fi(&pmf, t, h).unwrap())
            .collect();
        let fine = bounds_from_fisher(&prior, &fisher, &grid, 1)
            .unwrap()
            .asymptotic_bmse;
        assert!(
            (coarse / fine - 1.0).abs() < 0.05,
            "h-sensitivity {coarse} vs {fine}"
        );
    }

    #[test]
    fn markov1_mode_differs_on_correlated_models() {
        use crate::collisional::markov1_likelihood;
        let p = CollisionalParams::new(1.0, 0.2, 0.3 * std::f64::consts::PI, ProbePrep::Ground)
            .unwrap();
        let grid = TemperatureGrid::new(1.0f64, 3.0, 60).unwrap();
        let prior = prior_evaluate(&PriorSpec::flat(), &grid).unwrap();
        let bits: Vec<u8> = vec![0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 0, 0];
        let iid = |x: u8, t: f64| crate::collisional::likelihood(x, t, &p).unwrap();
        let mut a = PosteriorGrid::new(grid.clone(), prior.clone()).unwrap();
        a.update_batch(&bits, &iid).unwrap();
        let mut b = PosteriorGrid::new(grid, prior).unwrap();
        b.update_batch_markov1(&bits, &|x, prev, t| match prev {
            None => iid(x, t),
            Some(xp) => markov1_likelihood(x, xp, t, &p).unwrap(),
        })
        .unwrap();
        // both are proper posteriors, but the ledgers differ measurably
        let d: f64 = a
            .posterior()
            .iter()
            .zip(b.posterior())
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(d > 1e-4, "markov-1 mode indistinguishable from iid: {d}");
        assert!((b.posterior().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coupling_sweep_orderings() {
        let grid = TemperatureGrid::new(0.05f64, 5.0, 120).unwrap();
        let prior = prior_evaluate(&PriorSpec::lambda_alpha(-100.0), &grid).unwrap();
        let gammas: Vec<f64> = (1..=12).map(|i| 0.1 * i as f64).collect();
        let gs = [
            0.35 * std::f64::consts::PI,
            0.45 * std::f64::consts::PI,
            FRAC_PI_2,
        ];
        let sweep = coupling_sweep(1.0, &gammas, &gs, &prior, &grid).unwrap();
        // stronger probe coupling never hurts the best achievable risk
        for w in sweep.argmin.windows(2) {
            assert!(w[1].2 <= w[0].2 * (1.0 + 1e-12), "{} vs {}", w[1].2, w[0].2);
        }
        // a point-mass-like interval recovers the argmin of 1/F(T0)
        let t0 = 1.5;
        let tiny = TemperatureGrid::symmetric(t0, 0.01, 21).unwrap();
        let tiny_prior = prior_evaluate(&PriorSpec::lambda_alpha(-100.0), &tiny).unwrap();
        let sweep0 = coupling_sweep(1.0, &gammas, &[FRAC_PI_2], &tiny_prior, &tiny).unwrap();
        let direct: Vec<f64> = gammas
            .iter()
            .map(|&g| {
                let p = CollisionalParams::new(1.0, g, FRAC_PI_2, ProbePrep::Ground).unwrap();
                1.0 / classical_fi(&p.likelihood_pmf(), t0, 1e-5).unwrap()
            })
            .collect();
        let direct_arg = gammas[direct
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0];
        assert_abs_diff_eq!(sweep0.argmin[0].1, direct_arg, epsilon = 1e-12);
    }
}
