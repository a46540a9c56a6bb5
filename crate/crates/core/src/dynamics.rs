//! GKLS master-equation integration and superoperator construction.
//!
//! The equation of motion is `dρ/dt = −i[H(t), ρ] + Σ_k γ_k D[L_k]ρ` with
//! `D[L]ρ = LρL† − ½{L†L, ρ}`. Time-independent generators can be exponentiated
//! through their vectorized Liouvillian; time-dependent ones are integrated by
//! classic fourth-order Runge–Kutta, optionally with step-doubling adaptivity.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::qcore::matrix::{cone, CMat};
use crate::qcore::ops::{tensor_product, unvectorize, vectorize};
use crate::qcore::state::DensityMatrix;
use crate::real::Real;
use crate::C;

/// One GKLS dissipation channel: a rate and a jump operator.
#[derive(Clone)]
pub struct JumpChannel<T> {
    pub rate: T,
    pub op: CMat<T>,
}

impl<T: Real> JumpChannel<T> {
    pub fn new(rate: T, op: CMat<T>) -> Result<Self> {
        if rate < T::zero() {
            return Err(Error::InvalidParameter("jump rate must be >= 0".into()));
        }
        op.require_square()?;
        Ok(Self { rate, op })
    }
}

/// Time-dependent Hamiltonian `t ↦ H(t)` of fixed dimension.
pub struct TimeDepHamiltonian<T> {
    dim: usize,
    eval: Box<dyn Fn(T, &mut CMat<T>) + Send + Sync>,
}

impl<T: Real> TimeDepHamiltonian<T> {
    /// From a filler that writes `H(t)` into the provided buffer.
    pub fn new(dim: usize, eval: impl Fn(T, &mut CMat<T>) + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Box::new(eval),
        }
    }

    /// From a plain map `t ↦ H(t)`.
    pub fn from_map(dim: usize, f: impl Fn(T) -> CMat<T> + Send + Sync + 'static) -> Self {
        Self::new(dim, move |t, buf| *buf = f(t))
    }

    /// A constant Hamiltonian.
    pub fn constant(h: CMat<T>) -> Self {
        let dim = h.rows();
        Self::new(dim, move |_, buf| buf.clone_from(&h))
    }

    /// The zero Hamiltonian (purely dissipative evolution).
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, |_, buf| buf.set_zero())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_into(&self, t: T, buf: &mut CMat<T>) {
        (self.eval)(t, buf);
    }

    pub fn eval(&self, t: T) -> CMat<T> {
        let mut buf = CMat::zeros(self.dim, self.dim);
        self.eval_into(t, &mut buf);
        buf
    }
}

/// Integration window and step control.
#[derive(Clone, Copy, Debug)]
pub struct EvolutionConfig<T> {
    pub t0: T,
    pub t1: T,
    /// Base step; the actual fixed step divides the window evenly.
    pub dt: T,
    /// Enable step-doubling refinement against `tol`.
    pub adaptive: bool,
    pub tol: T,
}

impl<T: Real> EvolutionConfig<T> {
    pub fn fixed(t0: T, t1: T, dt: T) -> Self {
        Self {
            t0,
            t1,
            dt,
            adaptive: false,
            tol: T::lit(1e-10),
        }
    }

    pub fn adaptive(t0: T, t1: T, dt: T, tol: T) -> Self {
        Self {
            t0,
            t1,
            dt,
            adaptive: true,
            tol,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t1 < self.t0 {
            return Err(Error::InvalidParameter("t1 must be >= t0".into()));
        }
        if self.dt <= T::zero() {
            return Err(Error::InvalidParameter("dt must be > 0".into()));
        }
        Ok(())
    }
}

/// Single application of the dissipator `D[L]ρ = LρL† − ½{L†L, ρ}`.
pub fn dissipator<T: Real>(l: &CMat<T>, rho: &CMat<T>) -> CMat<T> {
    let ld = l.adjoint();
    let ldl = &ld * l;
    let mut out = &(l * rho) * &ld;
    let half = Complex::new(-T::lit(0.5), T::zero());
    let mut anti = &ldl * rho;
    anti.axpy(cone(), &(rho * &ldl));
    out.axpy(half, &anti);
    out
}

/// Vectorized Liouvillian: the d²×d² matrix `Ł` with `vec(dρ/dt) = Ł vec(ρ)`
/// under column stacking:
/// `Ł = −i(I⊗H − Hᵀ⊗I) + Σ γ [ L̄⊗L − ½ I⊗L†L − ½ (L†L)ᵀ⊗I ]`.
pub fn liouvillian_matrix<T: Real>(h: &CMat<T>, channels: &[JumpChannel<T>]) -> Result<CMat<T>> {
    h.require_square()?;
    let d = h.rows();
    let id = CMat::identity(d);
    let mi = Complex::new(T::zero(), -T::one());
    let mut l = tensor_product(&id, h);
    l.axpy(
        Complex::new(-T::one(), T::zero()),
        &tensor_product(&h.transpose(), &id),
    );
    let mut l = l.scale(mi);
    let half = Complex::new(T::lit(0.5), T::zero());
    for ch in channels {
        if ch.op.rows() != d {
            return Err(Error::DimensionMismatch(
                "jump operator vs Hamiltonian".into(),
            ));
        }
        let g = Complex::new(ch.rate, T::zero());
        let ldl = &ch.op.adjoint() * &ch.op;
        l.axpy(g, &tensor_product(&ch.op.conj(), &ch.op));
        l.axpy(-g * half, &tensor_product(&id, &ldl));
        l.axpy(-g * half, &tensor_product(&ldl.transpose(), &id));
    }
    Ok(l)
}

/// Evolve a state for time `t` under a time-independent generator via the
/// superoperator exponential `e^{Łt}`.
pub fn evolve_superop<T: Real>(
    rho0: &DensityMatrix<T>,
    h: &CMat<T>,
    channels: &[JumpChannel<T>],
    t: T,
) -> Result<DensityMatrix<T>> {
    let l = liouvillian_matrix(h, channels)?;
    let e = crate::qcore::linalg::expm(&l.scale_real(t))?;
    let v = &e * &vectorize(rho0.as_mat());
    let m = unvectorize(&v, rho0.dim(), rho0.dim())?;
    DensityMatrix::repair(&m)
}

struct Rk4Buffers<T> {
    h: CMat<T>,
    k: [CMat<T>; 4],
    stage: CMat<T>,
    t1: CMat<T>,
    t2: CMat<T>,
}

impl<T: Real> Rk4Buffers<T> {
    fn new(d: usize) -> Self {
        Self {
            h: CMat::zeros(d, d),
            k: [
                CMat::zeros(d, d),
                CMat::zeros(d, d),
                CMat::zeros(d, d),
                CMat::zeros(d, d),
            ],
            stage: CMat::zeros(d, d),
            t1: CMat::zeros(d, d),
            t2: CMat::zeros(d, d),
        }
    }
}

struct PreparedChannel<T> {
    rate: C<T>,
    op: CMat<T>,
    opd: CMat<T>,
    ldl: CMat<T>,
}

/// `out = −i[H,ρ] + Σ γ D[L]ρ`.
///
/// Uses the Hermiticity of `H(t)` and of the RK4 stages: `ρH = (Hρ)†` and
/// `ρL†L = (L†Lρ)†`, which keeps every multiplication sparse-friendly (the
/// left factor carries the structural zeros of `H` and `L`).
fn rhs<T: Real>(
    h: &TimeDepHamiltonian<T>,
    channels: &[PreparedChannel<T>],
    t: T,
    rho: &CMat<T>,
    out: &mut CMat<T>,
    bufs: &mut (CMat<T>, CMat<T>, CMat<T>),
) {
    let (hbuf, t1, t2) = (&mut bufs.0, &mut bufs.1, &mut bufs.2);
    h.eval_into(t, hbuf);
    hbuf.mul_into(rho, t1);
    out.set_zero();
    let mi = Complex::new(T::zero(), -T::one());
    out.axpy(mi, t1);
    out.axpy_adjoint(-mi, t1);
    let mhalf = Complex::new(-T::lit(0.5), T::zero());
    for ch in channels {
        // γ L ρ L†
        ch.op.mul_into(rho, t1);
        t1.mul_into(&ch.opd, t2);
        out.axpy(ch.rate, t2);
        // −γ/2 {L†L, ρ}
        ch.ldl.mul_into(rho, t1);
        out.axpy(ch.rate * mhalf, t1);
        out.axpy_adjoint(ch.rate * mhalf, t1);
    }
}

fn rk4_step<T: Real>(
    h: &TimeDepHamiltonian<T>,
    channels: &[PreparedChannel<T>],
    t: T,
    dt: T,
    rho: &CMat<T>,
    out: &mut CMat<T>,
    b: &mut Rk4Buffers<T>,
) {
    let half = T::lit(0.5);
    let mut scratch = (
        std::mem::replace(&mut b.h, CMat::zeros(1, 1)),
        std::mem::replace(&mut b.t1, CMat::zeros(1, 1)),
        std::mem::replace(&mut b.t2, CMat::zeros(1, 1)),
    );

    rhs(h, channels, t, rho, &mut b.k[0], &mut scratch);
    b.stage.clone_from(rho);
    b.stage.axpy(Complex::new(dt * half, T::zero()), &b.k[0]);
    let k0 = std::mem::replace(&mut b.k[0], CMat::zeros(1, 1));
    rhs(
        h,
        channels,
        t + dt * half,
        &b.stage,
        &mut b.k[1],
        &mut scratch,
    );
    b.stage.clone_from(rho);
    b.stage.axpy(Complex::new(dt * half, T::zero()), &b.k[1]);
    rhs(
        h,
        channels,
        t + dt * half,
        &b.stage,
        &mut b.k[2],
        &mut scratch,
    );
    b.stage.clone_from(rho);
    b.stage.axpy(Complex::new(dt, T::zero()), &b.k[2]);
    rhs(h, channels, t + dt, &b.stage, &mut b.k[3], &mut scratch);

    out.clone_from(rho);
    let w1 = Complex::new(dt / T::lit(6.0), T::zero());
    let w2 = Complex::new(dt / T::lit(3.0), T::zero());
    out.axpy(w1, &k0);
    out.axpy(w2, &b.k[1]);
    out.axpy(w2, &b.k[2]);
    out.axpy(w1, &b.k[3]);

    b.k[0] = k0;
    b.h = scratch.0;
    b.t1 = scratch.1;
    b.t2 = scratch.2;
}

/// Integrate the master equation from `cfg.t0` to `cfg.t1`.
///
/// Fixed-step RK4 by default; with `cfg.adaptive` each step is accepted only
/// if the step-doubling error estimate stays below `cfg.tol`. The trace is
/// monitored (drift beyond 1e−8 is an error) and renormalized once at output,
/// and tiny negative eigenvalues from integration drift are clipped.
pub fn evolve<T: Real>(
    rho0: &DensityMatrix<T>,
    h: &TimeDepHamiltonian<T>,
    channels: &[JumpChannel<T>],
    cfg: &EvolutionConfig<T>,
) -> Result<DensityMatrix<T>> {
    cfg.validate()?;
    let d = rho0.dim();
    if h.dim() != d {
        return Err(Error::DimensionMismatch("Hamiltonian vs state".into()));
    }
    let prepared: Vec<PreparedChannel<T>> = channels
        .iter()
        .map(|ch| {
            let opd = ch.op.adjoint();
            let ldl = &opd * &ch.op;
            PreparedChannel {
                rate: Complex::new(ch.rate, T::zero()),
                op: ch.op.clone(),
                opd,
                ldl,
            }
        })
        .collect();

    let span = cfg.t1 - cfg.t0;
    if span == T::zero() {
        return Ok(rho0.clone());
    }
    let mut b = Rk4Buffers::new(d);
    let mut rho = rho0.as_mat().clone();
    let mut next = CMat::zeros(d, d);

    if !cfg.adaptive {
        let steps = (span / cfg.dt).ceil().to_usize().unwrap_or(1).max(1);
        let dt = span / T::of(steps);
        let mut t = cfg.t0;
        for i in 0..steps {
            rk4_step(h, &prepared, t, dt, &rho, &mut next, &mut b);
            std::mem::swap(&mut rho, &mut next);
            t = cfg.t0 + span * T::of(i + 1) / T::of(steps);
            if i % 64 == 0 && !rho.is_finite() {
                return Err(Error::Integrator(format!("NaN/Inf at t = {t}")));
            }
        }
    } else {
        let mut t = cfg.t0;
        let mut dt = cfg.dt.min(span);
        let dt_floor = cfg.dt * T::lit(1e-12);
        let mut half1 = CMat::zeros(d, d);
        let mut half2 = CMat::zeros(d, d);
        while t < cfg.t1 {
            if dt < dt_floor {
                return Err(Error::Integrator(format!(
                    "adaptive step underflow at t = {t} (dt = {dt:e})"
                )));
            }
            let step = dt.min(cfg.t1 - t);
            rk4_step(h, &prepared, t, step, &rho, &mut next, &mut b);
            let hstep = step * T::lit(0.5);
            rk4_step(h, &prepared, t, hstep, &rho, &mut half1, &mut b);
            rk4_step(h, &prepared, t + hstep, hstep, &half1, &mut half2, &mut b);
            let err = next.max_abs_diff(&half2);
            if err > cfg.tol {
                dt = dt * T::lit(0.5);
                continue;
            }
            std::mem::swap(&mut rho, &mut half2);
            t = t + step;
            if !rho.is_finite() {
                return Err(Error::Integrator(format!("NaN/Inf at t = {t}")));
            }
            if err < cfg.tol * T::lit(0.02) {
                dt = dt * T::lit(2.0);
            }
        }
    }

    if !rho.is_finite() {
        return Err(Error::Integrator("NaN/Inf in final state".into()));
    }
    let drift = (rho.trace().re - T::one()).abs();
    if drift > T::lit(1e-8) {
        return Err(Error::Integrator(format!(
            "trace drift {drift:e} exceeds 1e-8"
        )));
    }
    DensityMatrix::repair(&rho)
}
