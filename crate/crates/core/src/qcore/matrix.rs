//! Dense complex matrices, row-major storage.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::C;

/// Dense complex matrix. All systems in this crate are small (≤ 64×64), so a
/// plain row-major `Vec` is the storage of choice.
#[derive(Clone, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Self {
            rows,
            cols,
            data: vec![C::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows of real values.
    pub fn from_real_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| C::new(rows[i][j], T::zero()))
    }

    /// Build from nested rows of complex values.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    /// Column vector from a slice.
    pub fn col_vector(v: &[C<T>]) -> Self {
        let mut m = Self::zeros(v.len(), 1);
        m.data.copy_from_slice(v);
        m
    }

    /// n×n diagonal matrix from real entries.
    pub fn diag_real(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C::new(x, T::zero());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                self.rows, self.cols
            )))
        }
    }

    pub fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows == other.rows && self.cols == other.cols {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )))
        }
    }

    pub fn set_zero(&mut self) {
        let z = C::new(T::zero(), T::zero());
        for x in &mut self.data {
            *x = z;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        let mut m = self.clone();
        for x in &mut m.data {
            *x = x.conj();
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<T> {
        debug_assert!(self.is_square());
        (0..self.rows)
            .map(|i| self[(i, i)])
            .fold(C::new(T::zero(), T::zero()), |a, b| a + b)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut m = self.clone();
        for x in &mut m.data {
            *x = *x * s;
        }
        m
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(C::new(s, T::zero()))
    }

    /// `self += s * other`, shapes must match.
    pub fn axpy(&mut self, s: C<T>, other: &Self) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x = *x + s * *y;
        }
    }

    /// `self += s * other†` without materializing the adjoint.
    pub fn axpy_adjoint(&mut self, s: C<T>, other: &Self) {
        debug_assert_eq!(self.rows, other.cols);
        debug_assert_eq!(self.cols, other.rows);
        let n = self.rows;
        let m = self.cols;
        for i in 0..n {
            for j in 0..m {
                self.data[i * m + j] = self.data[i * m + j] + s * other.data[j * n + i].conj();
            }
        }
    }

    /// `out = self * other` written into a preallocated buffer.
    pub fn mul_into(&self, other: &Self, out: &mut Self) {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        assert_eq!(out.rows, self.rows);
        assert_eq!(out.cols, other.cols);
        let (n, m, p) = (self.rows, self.cols, other.cols);
        out.set_zero();
        for i in 0..n {
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let brow = &other.data[k * p..(k + 1) * p];
                let orow = &mut out.data[i * p..(i + 1) * p];
                for j in 0..p {
                    orow[j] = orow[j] + a * brow[j];
                }
            }
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        self.mul_into(other, &mut out);
        out
    }

    /// Kronecker product, dims `(ra·rb) × (ca·cb)`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca, rb, cb) = (self.rows, self.cols, other.rows, other.cols);
        let mut out = Self::zeros(ra * rb, ca * cb);
        for ia in 0..ra {
            for ja in 0..ca {
                let a = self[(ia, ja)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for ib in 0..rb {
                    for jb in 0..cb {
                        out[(ia * rb + ib, ja * cb + jb)] = a * other[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Maximum column sum of absolute values.
    pub fn one_norm(&self) -> T {
        let mut best = T::zero();
        for j in 0..self.cols {
            let mut s = T::zero();
            for i in 0..self.rows {
                s = s + self[(i, j)].norm();
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|x| x.norm()).fold(T::zero(), T::max)
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitize(&self) -> Self {
        debug_assert!(self.is_square());
        let h = self.adjoint();
        let mut m = self.clone();
        m.axpy(C::new(T::one(), T::zero()), &h);
        m.scale_real(T::lit(0.5))
    }

    pub fn herm_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > dev {
                    dev = d;
                }
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.herm_deviation() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        debug_assert_eq!(self.rows, other.rows);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Index<(usize, usize)> for CMat<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: &CMat<T>) -> CMat<T> {
        let mut out = self.clone();
        out.axpy(C::new(T::one(), T::zero()), rhs);
        out
    }
}

impl<T: Real> Sub for &CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: &CMat<T>) -> CMat<T> {
        let mut out = self.clone();
        out.axpy(C::new(-T::one(), T::zero()), rhs);
        out
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: &CMat<T>) -> CMat<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Neg for &CMat<T> {
    type Output = CMat<T>;
    fn neg(self) -> CMat<T> {
        self.scale_real(-T::one())
    }
}

impl<T: Real> std::fmt::Debug for CMat<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Complex unit helpers.
pub fn c<T: Real>(re: f64, im: f64) -> C<T> {
    C::new(T::lit(re), T::lit(im))
}

pub fn cone<T: Real>() -> C<T> {
    C::new(T::one(), T::zero())
}

pub fn czero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

pub fn ci<T: Real>() -> C<T> {
    C::new(T::zero(), T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = CMat<f64>;

    #[test]
    fn matmul_and_kron_small() {
        let sx = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let sz = M::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let prod = &sx * &sz;
        // sx*sz = [[0,-1],[1,0]]
        assert_eq!(prod[(0, 1)], c::<f64>(-1.0, 0.0));
        assert_eq!(prod[(1, 0)], c::<f64>(1.0, 0.0));

        let k = sz.kron(&M::identity(2));
        for (i, want) in [1.0, 1.0, -1.0, -1.0].iter().enumerate() {
            assert_eq!(k[(i, i)].re, *want);
        }

        let k2 = M::identity(2).kron(&M::identity(2));
        assert!(k2.max_abs_diff(&M::identity(4)) == 0.0);
    }

    #[test]
    fn adjoint_hermitize() {
        let m = M::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 2.0)],
            vec![c(0.0, 0.0), c(3.0, 0.0)],
        ]);
        let h = m.hermitize();
        assert!(h.is_hermitian(1e-15));
        assert_eq!(h[(0, 1)], c::<f64>(0.0, 1.0));
        assert_eq!(h[(1, 0)], c::<f64>(0.0, -1.0));
    }
}
