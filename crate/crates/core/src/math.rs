//! Small numeric utilities: special functions, quadrature, 1-d minimization,
//! least squares, and the deterministic seed-derivation contract used by all
//! Monte-Carlo drivers.

use crate::real::Real;

/// Scaled modified Bessel function of the first kind, `e^{-|x|} I₀(x)`.
///
/// Power series in `x²/4`; all terms are positive so the sum carries full
/// relative precision. Safe for |x| up to ~700 thanks to the scaling.
pub fn bessel_i0_scaled<T: Real>(x: T) -> T {
    let ax = x.abs();
    // series for I0 overflows beyond ~|x| = 350; switch to the asymptotic
    // expansion there (well inside its accuracy regime)
    if ax < T::lit(340.0) {
        let q = x * x * T::lit(0.25);
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = T::one();
        loop {
            term = term * q / (k * k);
            let next = sum + term;
            if next == sum || k > T::lit(500.0) {
                break;
            }
            sum = next;
            k = k + T::one();
        }
        sum * (-ax).exp()
    } else {
        // I0(x) ~ e^x/sqrt(2πx) Σ ((2k-1)!!)² / (k! (8x)^k)
        let inv8 = T::one() / (T::lit(8.0) * ax);
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..12usize {
            let kk = T::of(k);
            let odd = T::lit(2.0) * kk - T::one();
            term = term * odd * odd * inv8 / kk;
            sum = sum + term;
        }
        sum / (T::lit(2.0) * T::PI() * ax).sqrt()
    }
}

/// `e^{x} I₀(x)` (finite for x ≤ 0 of any size; overflows for large x > 0
/// exactly where the true value does).
pub fn exp_i0<T: Real>(x: T) -> T {
    // e^x I0(x) = e^{x + |x|} · e^{-|x|} I0(x)
    bessel_i0_scaled(x) * (x + x.abs()).exp()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` via Newton iteration.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess
        let mut x = (T::PI() * (T::of(i) + T::lit(0.75)) / (T::of(n) + T::lit(0.5))).cos();
        loop {
            // Legendre recurrence for P_n(x) and P'_n(x)
            let mut p0 = T::one();
            let mut p1 = x;
            for k in 2..=n {
                let kk = T::of(k);
                let p2 = ((T::lit(2.0) * kk - T::one()) * x * p1 - (kk - T::one()) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            let dp = T::of(n) * (x * p1 - p0) / (x * x - T::one());
            let dx = p1 / dp;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                // one more recurrence for the weight at the converged node
                let mut q0 = T::one();
                let mut q1 = x;
                for k in 2..=n {
                    let kk = T::of(k);
                    let q2 = ((T::lit(2.0) * kk - T::one()) * x * q1 - (kk - T::one()) * q0) / kk;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = T::of(n) * (x * q1 - q0) / (x * x - T::one());
                nodes[i] = -x;
                nodes[n - 1 - i] = x;
                let w = T::lit(2.0) / ((T::one() - x * x) * dq * dq);
                weights[i] = w;
                weights[n - 1 - i] = w;
                break;
            }
        }
    }
    if n % 2 == 1 {
        // middle node is exactly 0 by symmetry
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section_min<T: Real>(
    mut a: T,
    mut b: T,
    tol: T,
    mut f: impl FnMut(T) -> T,
) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Least-squares line fit `y ≈ a + b x`; returns `(intercept, slope, r²)`.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> (T, T, T) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = T::of(xs.len());
    let mx = xs.iter().cloned().sum::<T>() / n;
    let my = ys.iter().cloned().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
        syy = syy + (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == T::zero() {
        T::one()
    } else {
        sxy * sxy / (sxx * syy)
    };
    (intercept, slope, r2)
}

/// Sample mean and (unbiased) sample variance.
pub fn mean_var<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::of(xs.len());
    let mean = xs.iter().cloned().sum::<T>() / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());
    (mean, var)
}

/// Log-gamma by the Lanczos approximation (g = 7, n = 9), ~1e-13 relative.
pub fn ln_gamma<T: Real>(x: T) -> T {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < T::lit(0.5) {
        // reflection: Γ(x)Γ(1−x) = π/sin(πx)
        let pix = T::PI() * x;
        return T::PI().ln() - pix.sin().ln() - ln_gamma(T::one() - x);
    }
    let z = x - T::one();
    let mut acc = T::lit(COEF[0]);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (z + T::of(i));
    }
    let t = z + T::lit(7.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (z + T::lit(0.5)) * t.ln() - t + acc.ln()
}

/// Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
pub fn beta_fn<T: Real>(a: T, b: T) -> T {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Derive a per-task RNG seed from a master seed and a task index
/// (SplitMix64). Workers pulling tasks in any order always see the same
/// per-task stream, so results are independent of the worker count.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E3779B97F4A7C15);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// The per-task generator: ChaCha12 keyed by [`derive_seed`].
pub fn task_rng(master: u64, index: u64) -> rand_chacha::ChaCha12Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha12Rng::seed_from_u64(derive_seed(master, index))
}

/// Uniform draw in `[0, 1)` as the crate scalar. Sampling always happens in
/// `f64` so that a fixed seed yields identical streams for every scalar type.
pub fn sample_unit<T: Real>(rng: &mut impl rand::Rng) -> T {
    T::lit(rng.random::<f64>())
}
