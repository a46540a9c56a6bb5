//! The collisional thermometer: a qubit system repeatedly thermalizes against
//! a bath at unknown temperature and partially swaps with a stream of fresh
//! probe qubits, which are then measured.
//!
//! Basis convention: index 0 is the excited level, index 1 the ground level,
//! so `H = (Ω/2)σ_z` gives the Gibbs state `diag(1, e^{Ω/T})/(1+e^{Ω/T})` and
//! measurement outcome `X = 1` is a click on the excited state.
//!
//! `steady_state` returns the system state at the moment it meets each fresh
//! probe, i.e. after bath thermalization; this is the state whose partial swap
//! with the probe produces the measured ancilla.

use num_complex::Complex;

use crate::dynamics::{liouvillian_matrix, JumpChannel};
use crate::error::{Error, Result};
use crate::math::{sample_unit, task_rng};
use crate::qcore::linalg::expm;
use crate::qcore::matrix::{cone, CMat};
use crate::qcore::ops::{partial_trace_mat, tensor_product, unvectorize, vectorize};
use crate::qcore::state::{von_neumann_entropy, DensityMatrix};
use crate::qfi::Pmf;
use crate::real::Real;

/// Initial probe preparation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbePrep<T> {
    /// Ground state.
    Ground,
    /// Thermal state at probe temperature `T_p`.
    Thermal(T),
    /// Ground with probability `q`, excited with probability `1 − q`.
    Mixture(T),
}

/// Physical parameters of the thermometer.
#[derive(Clone, Copy, Debug)]
pub struct CollisionalParams<T> {
    /// Energy gap Ω (system and probes are resonant).
    pub omega: T,
    /// Dimensionless system–bath coupling γτ_SE.
    pub gamma_tau_se: T,
    /// Dimensionless system–probe coupling gτ_SA ∈ (0, π/2].
    pub g_tau_sa: T,
    pub probe_prep: ProbePrep<T>,
}

impl<T: Real> CollisionalParams<T> {
    pub fn new(omega: T, gamma_tau_se: T, g_tau_sa: T, probe_prep: ProbePrep<T>) -> Result<Self> {
        if omega <= T::zero() {
            return Err(Error::InvalidParameter("omega must be > 0".into()));
        }
        if gamma_tau_se <= T::zero() {
            return Err(Error::InvalidParameter("gamma_tau_se must be > 0".into()));
        }
        if g_tau_sa <= T::zero() || g_tau_sa > T::FRAC_PI_2() + T::lit(1e-12) {
            return Err(Error::InvalidParameter(
                "g_tau_sa must lie in (0, pi/2]".into(),
            ));
        }
        match probe_prep {
            ProbePrep::Thermal(tp) if tp < T::zero() => {
                return Err(Error::InvalidParameter(
                    "probe temperature must be >= 0".into(),
                ))
            }
            ProbePrep::Mixture(q) if q < T::zero() || q > T::one() => {
                return Err(Error::InvalidParameter(
                    "mixture weight must lie in [0, 1]".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            omega,
            gamma_tau_se,
            g_tau_sa,
            probe_prep,
        })
    }

    /// Ground-state probes at full swap, the reference configuration.
    pub fn full_swap(omega: T, gamma_tau_se: T) -> Result<Self> {
        Self::new(omega, gamma_tau_se, T::FRAC_PI_2(), ProbePrep::Ground)
    }

    /// Bose–Einstein occupation `n̄ = 1/(e^{Ω/T} − 1)`.
    pub fn nbar(&self, temperature: T) -> T {
        T::one() / (self.omega / temperature).exp_m1()
    }

    /// Thermal relaxation exponent `Γ = γτ_SE (2n̄ + 1)`.
    pub fn big_gamma(&self, temperature: T) -> T {
        self.gamma_tau_se * (T::lit(2.0) * self.nbar(temperature) + T::one())
    }

    pub fn is_full_swap(&self) -> bool {
        (self.g_tau_sa - T::FRAC_PI_2()).abs() < T::lit(1e-12)
    }

    /// Excited-state population of the probe preparation.
    pub fn probe_excited_population(&self) -> T {
        match self.probe_prep {
            ProbePrep::Ground => T::zero(),
            ProbePrep::Thermal(tp) => {
                if tp == T::zero() {
                    T::zero()
                } else {
                    T::one() / (T::one() + (self.omega / tp).exp())
                }
            }
            ProbePrep::Mixture(q) => T::one() - q,
        }
    }

    /// Probe density matrix.
    pub fn probe_state(&self) -> DensityMatrix<T> {
        let a = self.probe_excited_population();
        DensityMatrix::unchecked(CMat::diag_real(&[a, T::one() - a]))
    }

    /// Thermal excited population of the bath, `1/(1+e^{Ω/T})`.
    pub fn bath_excited_population(&self, temperature: T) -> T {
        T::one() / (T::one() + (self.omega / temperature).exp())
    }

    /// The outcome model `P(x | T)` as a two-outcome pmf (x = 1 clicks on the
    /// excited state).
    pub fn likelihood_pmf(&self) -> Pmf<T> {
        let p = *self;
        Pmf::new(2, move |x, t| {
            likelihood(x as u8, t, &p).expect("likelihood on valid grid")
        })
    }
}

fn sigma_minus<T: Real>() -> CMat<T> {
    let mut l = CMat::zeros(2, 2);
    l[(1, 0)] = cone();
    l
}

fn sigma_plus<T: Real>() -> CMat<T> {
    let mut l = CMat::zeros(2, 2);
    l[(0, 1)] = cone();
    l
}

/// Superoperator (4×4, column stacking) of the bath map
/// `ℰ = exp{γτ_SE[(n̄+1)D[σ₋] + n̄ D[σ₊]]}`.
pub fn thermal_channel_superop<T: Real>(
    temperature: T,
    p: &CollisionalParams<T>,
) -> Result<CMat<T>> {
    if temperature <= T::zero() {
        return Err(Error::InvalidParameter(
            "bath temperature must be > 0".into(),
        ));
    }
    let nb = p.nbar(temperature);
    let channels = [
        JumpChannel::new(p.gamma_tau_se * (nb + T::one()), sigma_minus())?,
        JumpChannel::new(p.gamma_tau_se * nb, sigma_plus())?,
    ];
    let l = liouvillian_matrix(&CMat::zeros(2, 2), &channels)?;
    expm(&l)
}

/// One application of the bath map to a system state.
pub fn thermal_channel<T: Real>(
    rho_s: &DensityMatrix<T>,
    temperature: T,
    p: &CollisionalParams<T>,
) -> Result<DensityMatrix<T>> {
    let e = thermal_channel_superop(temperature, p)?;
    let v = &e * &vectorize(rho_s.as_mat());
    Ok(DensityMatrix::unchecked(unvectorize(&v, 2, 2)?))
}

/// Partial-swap unitary `exp{−i gτ_SA (σ₊ᔆσ₋ᴬ + σ₋ᔆσ₊ᴬ)}` on system ⊗ probe.
pub fn partial_swap_unitary<T: Real>(g_tau_sa: T) -> Result<CMat<T>> {
    let mut gen = tensor_product(&sigma_plus::<T>(), &sigma_minus());
    gen.axpy(cone(), &tensor_product(&sigma_minus::<T>(), &sigma_plus()));
    expm(&gen.scale(Complex::new(T::zero(), -g_tau_sa)))
}

/// One stroboscopic round: thermalize, then collide with a fresh probe.
/// Returns `(system after the collision, probe after the collision)`.
pub fn stroboscopic_step<T: Real>(
    rho_s: &DensityMatrix<T>,
    temperature: T,
    p: &CollisionalParams<T>,
) -> Result<(DensityMatrix<T>, DensityMatrix<T>)> {
    let thermalized = thermal_channel(rho_s, temperature, p)?;
    let u = partial_swap_unitary(p.g_tau_sa)?;
    let joint = tensor_product(thermalized.as_mat(), p.probe_state().as_mat());
    let evolved = &(&u * &joint) * &u.adjoint();
    let sys = partial_trace_mat(&evolved, &[2, 2], &[0])?;
    let anc = partial_trace_mat(&evolved, &[2, 2], &[1])?;
    Ok((DensityMatrix::unchecked(sys), DensityMatrix::unchecked(anc)))
}

fn trace_norm_diff<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    let d = a - b;
    match crate::qcore::eig::eigvalsh(&d.hermitize()) {
        Ok(evals) => evals.iter().map(|&l| l.abs()).fold(T::zero(), |x, y| x + y),
        Err(_) => T::infinity(),
    }
}

/// Pre-collision steady state of the stroboscopic dynamics: the fixed point
/// of (collide, thermalize) as seen by each arriving probe.
///
/// Ground-state probes admit the diagonal closed form with excited population
/// `1/[(1+e^{Ω/T})(1 + sin²(gτ_SA)/(e^Γ − 1))]`; any other preparation falls
/// back to power iteration of the stroboscopic map (‖Δρ‖₁ < 1e−12, ≤ 1e5
/// rounds).
pub fn steady_state<T: Real>(temperature: T, p: &CollisionalParams<T>) -> Result<DensityMatrix<T>> {
    if temperature <= T::zero() {
        return Err(Error::InvalidParameter(
            "bath temperature must be > 0".into(),
        ));
    }
    if p.probe_prep == ProbePrep::Ground {
        let gam = p.big_gamma(temperature);
        let s2 = p.g_tau_sa.sin().powi(2);
        let pop = T::one()
            / ((T::one() + (p.omega / temperature).exp()) * (T::one() + s2 / gam.exp_m1()));
        return Ok(DensityMatrix::unchecked(CMat::diag_real(&[
            pop,
            T::one() - pop,
        ])));
    }
    // power iteration on the post-collision state, then one more thermalization
    let mut sigma = DensityMatrix::maximally_mixed(2);
    let tol = T::lit(1e-12);
    let max_iter = 100_000usize;
    for _ in 0..max_iter {
        let (next, _) = stroboscopic_step(&sigma, temperature, p)?;
        let delta = trace_norm_diff(next.as_mat(), sigma.as_mat());
        sigma = next;
        if delta < tol {
            return thermal_channel(&sigma, temperature, p);
        }
    }
    Err(Error::Numerical(
        "steady state power iteration did not converge".into(),
    ))
}

/// Steady-regime probe state after its collision.
pub fn ancilla_state<T: Real>(
    temperature: T,
    p: &CollisionalParams<T>,
) -> Result<DensityMatrix<T>> {
    if p.probe_prep == ProbePrep::Ground {
        let gam = p.big_gamma(temperature);
        let csc2 = T::one() / p.g_tau_sa.sin().powi(2);
        let pop = T::one()
            / ((T::one() + (p.omega / temperature).exp()) * (csc2 + T::one() / gam.exp_m1()));
        return Ok(DensityMatrix::unchecked(CMat::diag_real(&[
            pop,
            T::one() - pop,
        ])));
    }
    let pre = steady_state(temperature, p)?;
    let u = partial_swap_unitary(p.g_tau_sa)?;
    let joint = tensor_product(pre.as_mat(), p.probe_state().as_mat());
    let evolved = &(&u * &joint) * &u.adjoint();
    Ok(DensityMatrix::unchecked(partial_trace_mat(
        &evolved,
        &[2, 2],
        &[1],
    )?))
}

/// Outcome probability `P(x | T)`, `x ∈ {0, 1}`, with `x = 1` the excited
/// state. Full-swap configurations use the closed forms; partial swaps apply
/// the Born rule to the steady-regime probe state.
pub fn likelihood<T: Real>(x: u8, temperature: T, p: &CollisionalParams<T>) -> Result<T> {
    if temperature <= T::zero() {
        return Err(Error::InvalidParameter("temperature must be > 0".into()));
    }
    let p1 = if p.is_full_swap() {
        // probe relaxes toward the bath population for a time Γ
        let decay = (-p.big_gamma(temperature)).exp();
        let pth = p.bath_excited_population(temperature);
        pth * (T::one() - decay) + p.probe_excited_population() * decay
    } else {
        ancilla_state(temperature, p)?.population(0)
    };
    Ok(if x == 1 { p1 } else { T::one() - p1 })
}

/// Closed-form QFI advantage over the fully thermalized probe
/// `(n̄+1)(e^Γ + 2n̄Γ − 1)² / (e^{2Γ}(n̄+1) − e^Γ − n̄)`; full swap only.
pub fn qfi_ratio<T: Real>(temperature: T, p: &CollisionalParams<T>) -> Result<T> {
    if !p.is_full_swap() {
        return Err(Error::InvalidParameter(
            "qfi_ratio: closed form requires full swap".into(),
        ));
    }
    let nb = p.nbar(temperature);
    let gam = p.big_gamma(temperature);
    // scaled by e^{-2Γ} to stay finite at large Γ
    let decay = (-gam).exp();
    let num = (nb + T::one()) * (T::one() + (T::lit(2.0) * nb * gam - T::one()) * decay).powi(2);
    let den = (nb + T::one()) - decay - nb * decay * decay;
    Ok(num / den)
}

/// A measured bit string plus the temperature that generated it.
#[derive(Clone, Debug)]
pub struct OutcomeRecord<T> {
    pub bits: Vec<u8>,
    pub true_temperature: T,
}

/// Draw `n` i.i.d. outcomes from the likelihood at `t0`. Deterministic for a
/// fixed seed.
pub fn sample_trajectory<T: Real>(
    t0: T,
    n: usize,
    p: &CollisionalParams<T>,
    seed: u64,
) -> Result<OutcomeRecord<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "trajectory length must be >= 1".into(),
        ));
    }
    let p1 = likelihood(1, t0, p)?;
    let mut rng = task_rng(seed, 0);
    let bits = (0..n)
        .map(|_| {
            if sample_unit::<T>(&mut rng) < p1 {
                1u8
            } else {
                0u8
            }
        })
        .collect();
    Ok(OutcomeRecord {
        bits,
        true_temperature: t0,
    })
}

/// Apply a 4×4 superoperator (column stacking) to factor 0 of a multipartite
/// density matrix with `2 × d_rest` total dimension.
fn apply_superop_factor0<T: Real>(e: &CMat<T>, state: &CMat<T>, d_rest: usize) -> CMat<T> {
    let d = 2 * d_rest;
    debug_assert_eq!(state.rows(), d);
    let mut out = CMat::zeros(d, d);
    for i2 in 0..2usize {
        for j2 in 0..2usize {
            for i in 0..2usize {
                for j in 0..2usize {
                    let w = e[(j2 * 2 + i2, j * 2 + i)];
                    if w.re == T::zero() && w.im == T::zero() {
                        continue;
                    }
                    for a in 0..d_rest {
                        for b in 0..d_rest {
                            let add = w * state[(i * d_rest + a, j * d_rest + b)];
                            let t = &mut out[(i2 * d_rest + a, j2 * d_rest + b)];
                            *t = *t + add;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Swap unitary between factor 0 (system) and the last factor, both qubits,
/// acting on `2 × mid × 2` dimensions.
fn swap_with_last<T: Real>(u4: &CMat<T>, state: &CMat<T>, mid: usize) -> CMat<T> {
    let d = 4 * mid;
    debug_assert_eq!(state.rows(), d);
    let mut ubig = CMat::zeros(d, d);
    for s2 in 0..2usize {
        for a2 in 0..2usize {
            for s in 0..2usize {
                for a in 0..2usize {
                    let w = u4[(s2 * 2 + a2, s * 2 + a)];
                    if w.re == T::zero() && w.im == T::zero() {
                        continue;
                    }
                    for m in 0..mid {
                        ubig[(s2 * 2 * mid + m * 2 + a2, s * 2 * mid + m * 2 + a)] = w;
                    }
                }
            }
        }
    }
    &(&ubig * state) * &ubig.adjoint()
}

/// Joint state of `n` consecutive probes collected in the steady regime
/// (system traced out). Guarded to `n ≤ 4`.
pub fn joint_block_state<T: Real>(
    n: usize,
    temperature: T,
    p: &CollisionalParams<T>,
) -> Result<DensityMatrix<T>> {
    if n == 0 || n > 4 {
        return Err(Error::InvalidParameter(
            "joint block size must lie in 1..=4".into(),
        ));
    }
    let e = thermal_channel_superop(temperature, p)?;
    let u = partial_swap_unitary(p.g_tau_sa)?;
    let probe = p.probe_state();
    // system (factor 0) starts in the pre-collision steady state
    let mut state = steady_state(temperature, p)?.into_mat();
    for k in 0..n {
        let d_rest = state.rows() / 2;
        if k > 0 {
            state = apply_superop_factor0(&e, &state, d_rest);
        }
        state = tensor_product(&state, probe.as_mat());
        state = swap_with_last(&u, &state, state.rows() / 4);
    }
    let nf = state.rows() / 2;
    let dims = [&[2usize][..], &vec![2; n][..]].concat();
    let keep: Vec<usize> = (1..=n).collect();
    let out = partial_trace_mat(&state, &dims, &keep)?;
    debug_assert_eq!(out.rows(), nf / (1 << (n - 1)) * (1 << (n - 1)));
    Ok(DensityMatrix::unchecked(out))
}

/// Mutual information `I(A_i : A_{i+n})` between a probe and its n-th
/// successor in the steady regime. Intermediate (unmeasured) probes are
/// marginalized, which the sequential construction does exactly while never
/// exceeding three active qubits.
pub fn mutual_information<T: Real>(
    gap: usize,
    temperature: T,
    p: &CollisionalParams<T>,
) -> Result<T> {
    if gap == 0 {
        return Err(Error::InvalidParameter("neighbor gap must be >= 1".into()));
    }
    let e = thermal_channel_superop(temperature, p)?;
    let u = partial_swap_unitary(p.g_tau_sa)?;
    let probe = p.probe_state();
    // collision i: (S, A_i)
    let pre = steady_state(temperature, p)?;
    let mut sa = tensor_product(pre.as_mat(), probe.as_mat());
    sa = swap_with_last(&u, &sa, 1);
    // intermediate collisions: thermalize, collide, discard the probe
    for _ in 0..gap.saturating_sub(1) {
        let mut s3 = apply_superop_factor0(&e, &sa, 2);
        s3 = tensor_product(&s3, probe.as_mat());
        s3 = swap_with_last(&u, &s3, 2);
        sa = partial_trace_mat(&s3, &[2, 2, 2], &[0, 1])?;
    }
    // final collision: keep (A_i, A_{i+gap})
    let mut s3 = apply_superop_factor0(&e, &sa, 2);
    s3 = tensor_product(&s3, probe.as_mat());
    s3 = swap_with_last(&u, &s3, 2);
    let pair = DensityMatrix::unchecked(partial_trace_mat(&s3, &[2, 2, 2], &[1, 2])?);
    let r1 = DensityMatrix::unchecked(partial_trace_mat(pair.as_mat(), &[2, 2], &[0])?);
    let r2 = DensityMatrix::unchecked(partial_trace_mat(pair.as_mat(), &[2, 2], &[1])?);
    let i = von_neumann_entropy(&r1)? + von_neumann_entropy(&r2)? - von_neumann_entropy(&pair)?;
    Ok(i.max(T::zero()))
}

/// Nearest-neighbor conditional outcome probability
/// `P(x_i | T, x_{i−1}) = tr(M_i M_{i−1} ρ_{A_{i−1}A_i}) / tr(M_{i−1} ρ_{A_{i−1}A_i})`.
pub fn markov1_likelihood<T: Real>(
    x_i: u8,
    x_prev: u8,
    temperature: T,
    p: &CollisionalParams<T>,
) -> Result<T> {
    let block = joint_block_state(2, temperature, p)?;
    let proj = |x: u8| -> CMat<T> {
        let mut m = CMat::zeros(2, 2);
        let idx = if x == 1 { 0 } else { 1 };
        m[(idx, idx)] = cone();
        m
    };
    let id = CMat::identity(2);
    let num = (&tensor_product(&proj(x_prev), &proj(x_i)) * block.as_mat())
        .trace()
        .re;
    let den = (&tensor_product(&proj(x_prev), &id) * block.as_mat())
        .trace()
        .re;
    if den < T::lit(1e-14) {
        return Err(Error::Numerical(format!(
            "conditioning probability {den:e} degenerate"
        )));
    }
    Ok(num / den)
}
