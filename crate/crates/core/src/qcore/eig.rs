//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! All matrices in this crate are ≤ 64×64, so Jacobi is the reference method:
//! simple, numerically robust, and its quadratic convergence makes run time a
//! non-issue at these sizes.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::C;

use super::matrix::CMat;

const MAX_SWEEPS: usize = 120;

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues ascending, V)` with
/// `A = V diag(λ) V†` and the k-th column of `V` the k-th eigenvector.
pub fn eigh<T: Real>(a: &CMat<T>) -> Result<(Vec<T>, CMat<T>)> {
    a.require_square()?;
    let n = a.rows();
    let mut m = a.hermitize();
    let mut v = CMat::identity(n);

    let scale = m.frobenius_norm();
    if scale == T::zero() {
        return Ok((vec![T::zero(); n], v));
    }
    let tol = scale * T::epsilon() * T::lit(1e-2).max(T::epsilon());

    for _sweep in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            let mut pairs: Vec<(T, usize)> = (0..n).map(|i| (m[(i, i)].re, i)).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let evals: Vec<T> = pairs.iter().map(|p| p.0).collect();
            let vs = CMat::from_fn(n, n, |i, k| v[(i, pairs[k].1)]);
            return Ok((evals, vs));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= tol * T::lit(1e-3) {
                    continue;
                }
                // phase of the off-diagonal entry and the real rotation angle
                let phase = apq / Complex::new(r, T::zero());
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // zero the (p,q) entry: roots of t² − 2τt − 1 = 0, smaller |t|
                let tau = (app - aqq) / (T::lit(2.0) * r);
                let t = if tau == T::zero() {
                    T::one()
                } else {
                    let s = if tau >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    -s / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s_mag = t * c;
                // unitary block [[c, s],[-s̄, c]] with s = s_mag · phase
                let s = phase * Complex::new(s_mag, T::zero());
                let sc = s.conj();

                // update m = G† m G on rows/cols p,q
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * Complex::new(c, T::zero()) - mkq * sc;
                    m[(k, q)] = mkp * s + mkq * Complex::new(c, T::zero());
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * Complex::new(c, T::zero()) - mqk * s;
                    m[(q, k)] = mpk * sc + mqk * Complex::new(c, T::zero());
                }
                m[(p, q)] = C::new(T::zero(), T::zero());
                m[(q, p)] = C::new(T::zero(), T::zero());
                // accumulate eigenvectors
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * Complex::new(c, T::zero()) - vkq * sc;
                    v[(k, q)] = vkp * s + vkq * Complex::new(c, T::zero());
                }
            }
        }
    }
    Err(Error::EigNoConvergence(MAX_SWEEPS))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh<T: Real>(a: &CMat<T>) -> Result<Vec<T>> {
    Ok(eigh(a)?.0)
}

/// Apply `f` to the eigenvalues of a Hermitian matrix: `V f(λ) V†`.
pub fn herm_fn<T: Real>(a: &CMat<T>, f: impl Fn(T) -> T) -> Result<CMat<T>> {
    let (evals, v) = eigh(a)?;
    let n = a.rows();
    let mut d = CMat::zeros(n, n);
    for (i, &l) in evals.iter().enumerate() {
        d[(i, i)] = C::new(f(l), T::zero());
    }
    Ok(&(&v * &d) * &v.adjoint())
}
