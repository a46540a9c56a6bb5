//! Classical and quantum Fisher information.
//!
//! The SLD `Λ_θ` solves the Lyapunov equation `Λρ + ρΛ = 2 ∂_θ ρ`, which in
//! vectorized form is the linear system `(ρᵀ⊗I + I⊗ρ) vec(Λ) = 2 vec(∂ρ)`.
//! The QFI follows as `2 vec(∂ρ)† (ρᵀ⊗I + I⊗ρ)⁻¹ vec(∂ρ) = tr(ρΛ²)`, and the
//! optimal measurement is the eigenbasis of `Λ`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::qcore::linalg::Lu;
use crate::qcore::matrix::CMat;
use crate::qcore::ops::{tensor_product, unvectorize, vectorize};
use crate::qcore::state::DensityMatrix;
use crate::qcore::{eigh, herm_fn};
use crate::real::Real;

/// Default central-difference step at parameter `theta`.
pub fn default_fd_step<T: Real>(theta: T) -> T {
    T::lit(1e-5) * T::one().max(theta.abs())
}

/// One-parameter family of density matrices `θ ↦ ρ_θ`, optionally with an
/// analytic derivative.
#[derive(Clone)]
pub struct ParamStateFamily<T> {
    eval: Arc<dyn Fn(T) -> DensityMatrix<T> + Send + Sync>,
    deriv: Option<Arc<dyn Fn(T) -> CMat<T> + Send + Sync>>,
    fd_step: Option<T>,
}

impl<T: Real> ParamStateFamily<T> {
    pub fn new(eval: impl Fn(T) -> DensityMatrix<T> + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            deriv: None,
            fd_step: None,
        }
    }

    pub fn with_deriv(mut self, deriv: impl Fn(T) -> CMat<T> + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_fd_step(mut self, h: T) -> Self {
        self.fd_step = Some(h);
        self
    }

    pub fn state(&self, theta: T) -> DensityMatrix<T> {
        (self.eval)(theta)
    }

    /// `dρ/dθ`, analytic if available, else central differences.
    pub fn derivative(&self, theta: T) -> CMat<T> {
        if let Some(d) = &self.deriv {
            return d(theta);
        }
        let h = self.fd_step.unwrap_or_else(|| default_fd_step(theta));
        let plus = (self.eval)(theta + h);
        let minus = (self.eval)(theta - h);
        (plus.as_mat() - minus.as_mat()).scale_real(T::one() / (T::lit(2.0) * h))
    }
}

fn regularized<T: Real>(rho: &DensityMatrix<T>, nu: T) -> CMat<T> {
    if nu == T::zero() {
        return rho.as_mat().clone();
    }
    let d = rho.dim();
    let mut m = rho.as_mat().scale_real(T::one() - nu);
    m.axpy(Complex::new(nu / T::of(d), T::zero()), &CMat::identity(d));
    m
}

fn sld_system<T: Real>(rho: &CMat<T>) -> CMat<T> {
    let d = rho.rows();
    let id = CMat::identity(d);
    let mut s = tensor_product(&rho.transpose(), &id);
    s.axpy(Complex::new(T::one(), T::zero()), &tensor_product(&id, rho));
    s
}

/// Symmetric logarithmic derivative at `theta`.
///
/// With `nu > 0` the system is solved on the regularized state
/// `ρ̃ = (1−ν)ρ + ν I/d` (and correspondingly scaled derivative), which keeps
/// the linear system invertible for rank-deficient states.
pub fn sld<T: Real>(family: &ParamStateFamily<T>, theta: T, nu: T) -> Result<CMat<T>> {
    let rho = family.state(theta);
    let drho = family.derivative(theta).scale_real(T::one() - nu);
    let rr = regularized(&rho, nu);
    let s = sld_system(&rr);
    let lu = Lu::factor(&s).map_err(|e| {
        if nu == T::zero() {
            Error::Singular(format!(
                "SLD system singular ({e}); needs regularization nu > 0"
            ))
        } else {
            e
        }
    })?;
    let rhs = vectorize(&drho).scale_real(T::lit(2.0));
    let lam = lu.solve(&rhs)?;
    Ok(unvectorize(&lam, rho.dim(), rho.dim())?.hermitize())
}

/// Quantum Fisher information `2 vec(∂ρ)† (ρᵀ⊗I + I⊗ρ)⁻¹ vec(∂ρ)` at `theta`,
/// on the `nu`-regularized state.
pub fn qfi<T: Real>(family: &ParamStateFamily<T>, theta: T, nu: T) -> Result<T> {
    let rho = family.state(theta);
    let drho = family.derivative(theta).scale_real(T::one() - nu);
    let rr = regularized(&rho, nu);
    let s = sld_system(&rr);
    let lu = Lu::factor(&s).map_err(|e| {
        if nu == T::zero() {
            Error::Singular(format!(
                "QFI system singular ({e}); needs regularization nu > 0"
            ))
        } else {
            e
        }
    })?;
    let v = vectorize(&drho);
    let x = lu.solve(&v)?;
    let quad = (&v.adjoint() * &x)[(0, 0)];
    Ok(T::lit(2.0) * quad.re)
}

/// QFI via `tr(ρ̃ Λ²)`; algebraically equal to [`qfi`], kept as the
/// independent second route.
pub fn qfi_via_sld<T: Real>(family: &ParamStateFamily<T>, theta: T, nu: T) -> Result<T> {
    let lam = sld(family, theta, nu)?;
    let rr = regularized(&family.state(theta), nu);
    Ok((&(&rr * &lam) * &lam).trace().re)
}

/// Pure-state QFI by Richardson extrapolation of the regularized QFI to
/// `ν → 0`, using ν ∈ {1e−4, 5e−5}.
pub fn qfi_pure_extrapolated<T: Real>(family: &ParamStateFamily<T>, theta: T) -> Result<T> {
    let nu1 = T::lit(1e-4);
    let nu2 = T::lit(5e-5);
    let f1 = qfi(family, theta, nu1)?;
    let f2 = qfi(family, theta, nu2)?;
    Ok(T::lit(2.0) * f2 - f1)
}

/// Rank-1 projectors onto the eigenbasis of a Hermitian operator (the optimal
/// POVM when the operator is the SLD).
pub fn optimal_povm<T: Real>(sld: &CMat<T>) -> Result<Vec<CMat<T>>> {
    let tol = crate::qcore::state::state_tol::<T>();
    if !sld.is_hermitian(tol * T::lit(1e3)) {
        return Err(Error::InvalidParameter(
            "optimal_povm: input not Hermitian".into(),
        ));
    }
    let (_, v) = eigh(sld)?;
    let d = sld.rows();
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let proj = CMat::from_fn(d, d, |i, j| v[(i, k)] * v[(j, k)].conj());
        out.push(proj);
    }
    Ok(out)
}

/// Finite outcome distribution `p(x | θ)`.
#[derive(Clone)]
pub struct Pmf<T> {
    n_outcomes: usize,
    prob: Arc<dyn Fn(usize, T) -> T + Send + Sync>,
}

impl<T: Real> Pmf<T> {
    pub fn new(n_outcomes: usize, prob: impl Fn(usize, T) -> T + Send + Sync + 'static) -> Self {
        Self {
            n_outcomes,
            prob: Arc::new(prob),
        }
    }

    /// Born-rule distribution of a POVM measured on a state family.
    pub fn born(family: ParamStateFamily<T>, povm: Vec<CMat<T>>) -> Self {
        let n = povm.len();
        Self::new(n, move |x, theta| {
            let rho = family.state(theta);
            (&povm[x] * rho.as_mat()).trace().re
        })
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn prob(&self, x: usize, theta: T) -> T {
        (self.prob)(x, theta)
    }

    /// Verify positivity and unit total mass at `theta`.
    pub fn validate(&self, theta: T) -> Result<()> {
        let mut sum = T::zero();
        for x in 0..self.n_outcomes {
            let p = self.prob(x, theta);
            if p < -T::lit(1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "negative probability {p:e} at outcome {x}"
                )));
            }
            sum = sum + p;
        }
        if (sum - T::one()).abs() > T::lit(1e-10) {
            return Err(Error::InvalidParameter(format!("pmf sums to {sum}, not 1")));
        }
        Ok(())
    }

    /// Product distribution of two independent models of the same parameter.
    pub fn product(a: &Pmf<T>, b: &Pmf<T>) -> Self {
        let (na, nb) = (a.n_outcomes, b.n_outcomes);
        let (pa, pb) = (a.prob.clone(), b.prob.clone());
        Self::new(na * nb, move |x, theta| {
            pa(x / nb, theta) * pb(x % nb, theta)
        })
    }
}

/// Classical Fisher information `Σ_x (∂_θ p)² / p` by central differences with
/// step `h`; outcomes with `p < 1e−14` are omitted.
pub fn classical_fi<T: Real>(pmf: &Pmf<T>, theta: T, h: T) -> Result<T> {
    pmf.validate(theta)?;
    let cutoff = T::lit(1e-14);
    let mut fi = T::zero();
    for x in 0..pmf.n_outcomes() {
        let p = pmf.prob(x, theta);
        if p < cutoff {
            continue;
        }
        let dp = (pmf.prob(x, theta + h) - pmf.prob(x, theta - h)) / (T::lit(2.0) * h);
        fi = fi + dp * dp / p;
    }
    Ok(fi)
}

/// Thermal Fisher information `(⟨H²⟩ − ⟨H⟩²)/T⁴` of the Gibbs state of `h`.
pub fn thermal_fi<T: Real>(h: &CMat<T>, temperature: T) -> Result<T> {
    if temperature <= T::zero() {
        return Err(Error::InvalidParameter(
            "thermal_fi: temperature must be > 0".into(),
        ));
    }
    let rho = DensityMatrix::gibbs(h, temperature)?;
    let h2 = (&(h * h) * rho.as_mat()).trace().re;
    let h1 = (h * rho.as_mat()).trace().re;
    Ok((h2 - h1 * h1) / temperature.powi(4))
}

/// Thermal SLD `β²(H − ⟨H⟩)` computed from the generic solver applied to the
/// Gibbs family; exposed mainly for cross-checks.
pub fn thermal_sld<T: Real>(h: &CMat<T>, temperature: T) -> Result<CMat<T>> {
    let hc = h.clone();
    let family = ParamStateFamily::new(move |t: T| DensityMatrix::gibbs(&hc, t).expect("valid T"));
    sld(&family, temperature, T::zero())
}

/// Kullback–Leibler divergence `Σ p ln(p/q)` between `p` at `theta_p` and `q`
/// at `theta_q`. Errors when `q` vanishes on the support of `p`.
pub fn kl_divergence<T: Real>(p: &Pmf<T>, theta_p: T, q: &Pmf<T>, theta_q: T) -> Result<T> {
    if p.n_outcomes() != q.n_outcomes() {
        return Err(Error::DimensionMismatch("KL: outcome sets differ".into()));
    }
    let cutoff = T::lit(1e-14);
    let mut acc = T::zero();
    for x in 0..p.n_outcomes() {
        let px = p.prob(x, theta_p);
        if px <= cutoff {
            continue;
        }
        let qx = q.prob(x, theta_q);
        if qx <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "KL support violation: q(x={x}) = 0 where p > 0"
            )));
        }
        acc = acc + px * (px / qx).ln();
    }
    Ok(acc)
}

/// Square root of a PSD matrix (helper for tests and fidelity cross-checks).
pub fn psd_sqrt<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    herm_fn(m, |l| l.max(T::zero()).sqrt())
}
