//! LU solves and the matrix exponential.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::C;

use super::matrix::CMat;

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    lu: CMat<T>,
    piv: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &CMat<T>) -> Result<Self> {
        a.require_square()?;
        let n = a.rows();
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(T::min_positive_value());
        let tiny = scale * T::epsilon() * T::of(n) * T::lit(8.0);
        for k in 0..n {
            // pivot search
            let mut pmax = lu[(k, k)].norm();
            let mut prow = k;
            for i in (k + 1)..n {
                let v = lu[(i, k)].norm();
                if v > pmax {
                    pmax = v;
                    prow = i;
                }
            }
            if pmax <= tiny {
                return Err(Error::Singular(format!("pivot {pmax:e} at column {k}")));
            }
            if prow != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(prow, j)];
                    lu[(prow, j)] = tmp;
                }
                piv.swap(k, prow);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * v;
                }
            }
        }
        Ok(Self { lu, piv })
    }

    /// Solve `A X = B` for each column of `B`.
    pub fn solve(&self, b: &CMat<T>) -> Result<CMat<T>> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "solve: rhs has {} rows, expected {n}",
                b.rows()
            )));
        }
        let mut x = CMat::zeros(n, b.cols());
        let mut col = vec![C::new(T::zero(), T::zero()); n];
        for j in 0..b.cols() {
            for i in 0..n {
                col[i] = b[(self.piv[i], j)];
            }
            // forward substitution (unit lower)
            for i in 1..n {
                let mut s = col[i];
                for k in 0..i {
                    s = s - self.lu[(i, k)] * col[k];
                }
                col[i] = s;
            }
            // back substitution
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in (i + 1)..n {
                    s = s - self.lu[(i, k)] * col[k];
                }
                col[i] = s / self.lu[(i, i)];
            }
            for i in 0..n {
                x[(i, j)] = col[i];
            }
        }
        Ok(x)
    }
}

/// Solve `A X = B`.
pub fn solve<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    Lu::factor(a)?.solve(b)
}

// Padé-13 numerator coefficients for expm (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling-and-squaring with a degree-13 Padé
/// approximant. Accurate to ~1e-13 relative for the moderate norms used here.
pub fn expm<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    a.require_square()?;
    if !a.is_finite() {
        return Err(Error::Numerical("expm: non-finite input".into()));
    }
    let n = a.rows();
    let norm = a.one_norm();
    let mut s: i32 = 0;
    if norm > T::lit(THETA13) {
        s = (norm / T::lit(THETA13))
            .log2()
            .ceil()
            .to_i32()
            .unwrap_or(0)
            .max(0);
    }
    let scale = T::lit(0.5).powi(s);
    let a1 = a.scale_real(scale);

    let b: Vec<C<T>> = PADE13
        .iter()
        .map(|&x| C::new(T::lit(x), T::zero()))
        .collect();
    let id = CMat::identity(n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    // U = A [ A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I ]
    let mut w1 = a6.scale(b[13]);
    w1.axpy(b[11], &a4);
    w1.axpy(b[9], &a2);
    let mut w = &a6 * &w1;
    w.axpy(b[7], &a6);
    w.axpy(b[5], &a4);
    w.axpy(b[3], &a2);
    w.axpy(b[1], &id);
    let u = &a1 * &w;

    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut z1 = a6.scale(b[12]);
    z1.axpy(b[10], &a4);
    z1.axpy(b[8], &a2);
    let mut v = &a6 * &z1;
    v.axpy(b[6], &a6);
    v.axpy(b[4], &a4);
    v.axpy(b[2], &a2);
    v.axpy(b[0], &id);

    // (V - U) F = (V + U)
    let vm = &v - &u;
    let vp = &v + &u;
    let mut f = solve(&vm, &vp)?;
    for _ in 0..s {
        f = &f * &f;
    }
    Ok(f)
}
