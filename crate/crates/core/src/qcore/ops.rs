//! Tensor-algebra operations: Kronecker products, partial traces and the
//! column-stacking vectorization used by every superoperator in the crate.

use crate::error::{Error, Result};
use crate::real::Real;

use super::matrix::{czero, CMat};
use super::state::DensityMatrix;

/// Kronecker product `a ⊗ b`.
pub fn tensor_product<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kron(b)
}

/// Reduced matrix over the kept factors of a multipartite square matrix.
///
/// `dims` lists the factor dimensions in tensor order (factor 0 is the most
/// significant index, matching [`tensor_product`]); `keep` lists the factor
/// indices to retain, in their original order.
pub fn partial_trace_mat<T: Real>(m: &CMat<T>, dims: &[usize], keep: &[usize]) -> Result<CMat<T>> {
    m.require_square()?;
    let total: usize = dims.iter().product();
    if total != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "partial trace: dims product {total} != matrix dim {}",
            m.rows()
        )));
    }
    let nf = dims.len();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep.iter().any(|&k| k >= nf) {
        return Err(Error::InvalidParameter(
            "partial trace: bad keep set".into(),
        ));
    }
    let drop: Vec<usize> = (0..nf).filter(|i| !keep_sorted.contains(i)).collect();
    let dk: usize = keep_sorted.iter().map(|&i| dims[i]).product();
    let dd: usize = drop.iter().map(|&i| dims[i]).product::<usize>().max(1);

    // strides of each factor in the flattened index
    let mut stride = vec![1usize; nf];
    for i in (0..nf.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * dims[i + 1];
    }

    let flat = |subset: &[usize], multi: usize| -> usize {
        // expand `multi` (mixed radix over `subset`) into a flat index contribution
        let mut rem = multi;
        let mut idx = 0usize;
        for &f in subset {
            let later: usize = subset
                .iter()
                .filter(|&&g| g > f)
                .map(|&g| dims[g])
                .product::<usize>()
                .max(1);
            let digit = (rem / later) % dims[f];
            rem %= later;
            idx += digit * stride[f];
        }
        idx
    };

    let mut out = CMat::zeros(dk, dk);
    for a in 0..dk {
        let base_a = flat(&keep_sorted, a);
        for b in 0..dk {
            let base_b = flat(&keep_sorted, b);
            let mut acc = czero();
            for t in 0..dd {
                let off = flat(&drop, t);
                acc = acc + m[(base_a + off, base_b + off)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Partial trace of a density matrix; the result is again a state.
pub fn partial_trace<T: Real>(
    rho: &DensityMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix<T>> {
    let m = partial_trace_mat(rho.as_mat(), dims, keep)?;
    Ok(DensityMatrix::unchecked(m))
}

/// Column-stacking vectorization: `vec([[a,b],[c,d]]) = (a,c,b,d)ᵀ`, so that
/// `vec(ABC) = (Cᵀ ⊗ A) vec(B)`.
pub fn vectorize<T: Real>(m: &CMat<T>) -> CMat<T> {
    let (r, c) = (m.rows(), m.cols());
    let mut v = CMat::zeros(r * c, 1);
    let mut k = 0;
    for j in 0..c {
        for i in 0..r {
            v[(k, 0)] = m[(i, j)];
            k += 1;
        }
    }
    v
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Real>(v: &CMat<T>, rows: usize, cols: usize) -> Result<CMat<T>> {
    if v.cols() != 1 || v.rows() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "unvectorize: vector {}x{} vs target {rows}x{cols}",
            v.rows(),
            v.cols()
        )));
    }
    let mut m = CMat::zeros(rows, cols);
    let mut k = 0;
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = v[(k, 0)];
            k += 1;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::expm;
    use crate::qcore::matrix::c;
    use crate::qcore::state::{DensityMatrix, Ket};
    use rand::{Rng, SeedableRng};

    type M = CMat<f64>;

    fn random_mat(n: usize, m: usize, rng: &mut impl Rng) -> M {
        M::from_fn(n, m, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn vectorize_column_convention() {
        let m = M::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 0.0), c(4.0, 0.0)],
        ]);
        let v = vectorize(&m);
        let want = [1.0, 3.0, 2.0, 4.0];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(v[(i, 0)].re, *w);
        }
        let round = unvectorize(&v, 2, 2).unwrap();
        assert!(round.max_abs_diff(&m) == 0.0);
    }

    #[test]
    fn vec_product_identity_and_hs_inner() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        for _ in 0..5 {
            let a = random_mat(2, 2, &mut rng);
            let b = random_mat(2, 2, &mut rng);
            let cc = random_mat(2, 2, &mut rng);
            let lhs = vectorize(&(&(&a * &b) * &cc));
            let rhs = &tensor_product(&cc.transpose(), &a) * &vectorize(&b);
            assert!(lhs.max_abs_diff(&rhs) < 1e-13);
        }
        // tr(A†B) = vec(A)† vec(B) on random 3x3
        let a = random_mat(3, 3, &mut rng);
        let b = random_mat(3, 3, &mut rng);
        let tr = (&a.adjoint() * &b).trace();
        let ip = (&vectorize(&a).adjoint() * &vectorize(&b))[(0, 0)];
        assert!((tr - ip).norm() < 1e-13);
    }

    #[test]
    fn double_bit_flip() {
        let sx = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let xx = tensor_product(&sx, &sx);
        let k00 = Ket::<f64>::basis(4, 0);
        let out = &xx * &k00.as_column();
        // (σx ⊗ σx)|00⟩ = |11⟩
        assert!((out[(3, 0)].re - 1.0).abs() < 1e-15);
        assert!(out[(0, 0)].norm() + out[(1, 0)].norm() + out[(2, 0)].norm() < 1e-15);
    }

    #[test]
    fn bell_state_marginal_is_maximally_mixed() {
        let bell = Ket::new(vec![
            c::<f64>(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ])
        .unwrap();
        let rho = DensityMatrix::from_ket(&bell);
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(
            red.as_mat()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).as_mat())
                < 1e-14
        );
    }

    #[test]
    fn product_state_marginals() {
        let r1 = DensityMatrix::from_ket(&crate::qcore::state::bloch_ket(0.9f64, 0.4));
        let r2 = DensityMatrix::<f64>::maximally_mixed(2);
        let joint = tensor_product(r1.as_mat(), r2.as_mat());
        let red = partial_trace_mat(&joint, &[2, 2], &[1]).unwrap();
        assert!(red.max_abs_diff(r2.as_mat()) < 1e-14);
        let red0 = partial_trace_mat(&joint, &[2, 2], &[0]).unwrap();
        assert!(red0.max_abs_diff(r1.as_mat()) < 1e-14);
    }

    #[test]
    fn swap_moves_system_into_ancilla() {
        // evolve ρ_S ⊗ ρ_A by a full swap built from matrix exponential and
        // keep the ancilla: must equal ρ_S exactly.
        let rs = DensityMatrix::from_ket(&crate::qcore::state::bloch_ket(1.2f64, 0.7));
        let ra = DensityMatrix::from_ket(&Ket::basis(2, 1));
        // SWAP = exp(-i π/2 (XX+YY+ZZ-I)/2)·phase: build directly instead
        let mut swap = M::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = c(1.0, 0.0);
            }
        }
        let joint = tensor_product(rs.as_mat(), ra.as_mat());
        let evolved = &(&swap * &joint) * &swap.adjoint();
        let kept = partial_trace_mat(&evolved, &[2, 2], &[1]).unwrap();
        assert!(kept.max_abs_diff(rs.as_mat()) < 1e-14);
        // tracing out everything yields the 1x1 scalar trace
        let all = partial_trace_mat(&evolved, &[2, 2], &[]).unwrap();
        assert!((all[(0, 0)] - evolved.trace()).norm() < 1e-14);
        // trace preserved by every partial trace
        assert!((kept.trace() - evolved.trace()).norm() < 1e-12);
    }

    #[test]
    fn three_factor_partial_trace() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let a = random_mat(2, 2, &mut rng).hermitize();
        let b = random_mat(3, 3, &mut rng).hermitize();
        let cm = random_mat(2, 2, &mut rng).hermitize();
        let joint = tensor_product(&tensor_product(&a, &b), &cm);
        let kept = partial_trace_mat(&joint, &[2, 3, 2], &[1]).unwrap();
        let want = b.scale_real((a.trace() * cm.trace()).re);
        assert!(kept.max_abs_diff(&want) < 1e-12);
        let kept02 = partial_trace_mat(&joint, &[2, 3, 2], &[0, 2]).unwrap();
        let want02 = tensor_product(&a, &cm).scale_real(b.trace().re);
        assert!(kept02.max_abs_diff(&want02) < 1e-12);
    }

    #[test]
    fn anti_hermitian_exponential_is_unitary() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let h = random_mat(4, 4, &mut rng).hermitize();
        let u = expm(&h.scale(c(0.0, -1.0))).unwrap();
        let prod = &u.adjoint() * &u;
        assert!(prod.max_abs_diff(&M::identity(4)) < 1e-10);
    }
}
