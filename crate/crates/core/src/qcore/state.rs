//! Kets and density matrices.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::C;

use super::eig::{eigh, herm_fn};
use super::matrix::{cone, czero, CMat};

/// Tolerance for state invariants (hermiticity, trace, positivity).
pub fn state_tol<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(100.0))
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket<T> {
    amps: Vec<C<T>>,
}

impl<T: Real> Ket<T> {
    /// Normalizes the amplitudes; errors on a zero vector.
    pub fn new(amps: Vec<C<T>>) -> Result<Self> {
        let norm = amps
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        if norm <= T::epsilon().sqrt() {
            return Err(Error::InvalidState("ket with (near) zero norm".into()));
        }
        let inv = T::one() / norm;
        Ok(Self {
            amps: amps
                .into_iter()
                .map(|a| a * Complex::new(inv, T::zero()))
                .collect(),
        })
    }

    /// Computational basis state `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amps = vec![czero(); dim];
        amps[index] = cone();
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * *b)
            .fold(czero(), |acc, x| acc + x)
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn outer(&self) -> CMat<T> {
        let d = self.dim();
        CMat::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(*a * *b);
            }
        }
        Self { amps }
    }

    /// Embed into a larger space, putting the amplitudes at the given indices.
    pub fn embed(&self, dim: usize, positions: &[usize]) -> Self {
        assert_eq!(positions.len(), self.dim());
        let mut amps = vec![czero(); dim];
        for (k, &p) in positions.iter().enumerate() {
            amps[p] = self.amps[k];
        }
        Self { amps }
    }

    /// `⟨ψ| M |ψ⟩`.
    pub fn expectation(&self, m: &CMat<T>) -> C<T> {
        let d = self.dim();
        debug_assert_eq!(m.rows(), d);
        let mut acc = czero();
        for i in 0..d {
            let mut row = czero();
            for j in 0..d {
                row = row + m[(i, j)] * self.amps[j];
            }
            acc = acc + self.amps[i].conj() * row;
        }
        acc
    }

    /// Column-vector view.
    pub fn as_column(&self) -> CMat<T> {
        CMat::col_vector(&self.amps)
    }
}

/// Bloch-sphere state `cos(α/2)|0⟩ + e^{iφ} sin(α/2)|1⟩`.
pub fn bloch_ket<T: Real>(alpha: T, phi: T) -> Ket<T> {
    let half = alpha * T::lit(0.5);
    let a0 = Complex::new(half.cos(), T::zero());
    let a1 = Complex::new(phi.cos(), phi.sin()) * Complex::new(half.sin(), T::zero());
    Ket { amps: vec![a0, a1] }
}

/// Square, Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix<T> {
    m: CMat<T>,
}

impl<T: Real> std::fmt::Debug for DensityMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DensityMatrix({:?})", self.m)
    }
}

impl<T: Real> DensityMatrix<T> {
    /// Validates the state invariants (tolerance [`state_tol`]).
    pub fn new(m: CMat<T>) -> Result<Self> {
        m.require_square()?;
        let tol = state_tol::<T>();
        let dev = m.herm_deviation();
        if dev > tol {
            return Err(Error::InvalidState(format!(
                "hermiticity deviation {dev:e}"
            )));
        }
        let tr = m.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!(
                "trace {} + {}i != 1",
                tr.re, tr.im
            )));
        }
        let evals = super::eig::eigvalsh(&m)?;
        if let Some(min) = evals.first() {
            if *min < -tol {
                return Err(Error::InvalidState(format!(
                    "negative eigenvalue {:e}",
                    *min
                )));
            }
        }
        Ok(Self { m })
    }

    /// Skip validation. For internal call sites that construct states by
    /// trace-preserving algebra.
    pub fn unchecked(m: CMat<T>) -> Self {
        debug_assert!(m.is_square());
        Self { m }
    }

    /// Symmetrize, clip tiny negative eigenvalues and renormalize the trace.
    /// Intended for post-integration states where RK drift may push
    /// eigenvalues slightly below zero.
    pub fn repair(m: &CMat<T>) -> Result<Self> {
        m.require_square()?;
        let h = m.hermitize();
        let cleaned = herm_fn(&h, |l| l.max(T::zero()))?;
        let tr = cleaned.trace().re;
        if tr <= T::zero() {
            return Err(Error::InvalidState("repair: non-positive trace".into()));
        }
        Ok(Self {
            m: cleaned.scale_real(T::one() / tr),
        })
    }

    pub fn from_ket(k: &Ket<T>) -> Self {
        Self { m: k.outer() }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: CMat::identity(dim).scale_real(T::one() / T::of(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn as_mat(&self) -> &CMat<T> {
        &self.m
    }

    pub fn into_mat(self) -> CMat<T> {
        self.m
    }

    /// Population `⟨i|ρ|i⟩`.
    pub fn population(&self, i: usize) -> T {
        self.m[(i, i)].re
    }

    /// Gibbs state `e^{-H/T} / Z` of a Hermitian Hamiltonian.
    pub fn gibbs(h: &CMat<T>, temperature: T) -> Result<Self> {
        if temperature <= T::zero() {
            return Err(Error::InvalidParameter("temperature must be > 0".into()));
        }
        let (evals, v) = eigh(h)?;
        // subtract the minimum eigenvalue before exponentiating
        let e0 = evals.iter().cloned().fold(T::infinity(), T::min);
        let n = h.rows();
        let mut d = CMat::zeros(n, n);
        let mut z = T::zero();
        for (i, &e) in evals.iter().enumerate() {
            let w = (-(e - e0) / temperature).exp();
            z = z + w;
            d[(i, i)] = Complex::new(w, T::zero());
        }
        let rho = (&(&v * &d) * &v.adjoint()).scale_real(T::one() / z);
        Ok(Self { m: rho })
    }
}

/// Uhlmann fidelity `(tr√(√ρ σ √ρ))²`; reduces to `⟨ψ|ρ|ψ⟩` for pure `σ`.
pub fn fidelity<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "fidelity: states of different dimension".into(),
        ));
    }
    let sr = herm_fn(rho.as_mat(), |l| l.max(T::zero()).sqrt())?;
    let inner = &(&sr * sigma.as_mat()) * &sr;
    let evals = eigh(&inner)?.0;
    let s: T = evals
        .iter()
        .map(|&l| l.max(T::zero()).sqrt())
        .fold(T::zero(), |a, b| a + b);
    Ok((s * s).min(T::one()))
}

/// `⟨ψ|ρ|ψ⟩`, the fidelity against a pure state.
pub fn fidelity_pure<T: Real>(rho: &DensityMatrix<T>, psi: &Ket<T>) -> T {
    psi.expectation(rho.as_mat()).re
}

/// Von Neumann entropy `−Σ λ ln λ` (natural log); eigenvalues ≤ 1e−14 count 0.
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    let evals = eigh(rho.as_mat())?.0;
    let cutoff = T::lit(1e-14);
    Ok(evals
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|&l| -l * l.ln())
        .fold(T::zero(), |a, b| a + b))
}
