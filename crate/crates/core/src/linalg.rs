//! Small dense complex linear algebra: pivoted solves for per-pixel unfolding
//! systems, power iteration for operator-norm estimates, and the unitary
//! Procrustes factor used by adaptive transform updates.

use crate::error::{ReconError, Result};
use crate::num::{Cplx, Scalar};
use ndarray::{Array1, Array2};

/// Solves the small dense system `a·v = b` by LU with partial pivoting,
/// overwriting `a`; returns the solution. Errors when a pivot is (near)
/// zero relative to the matrix scale.
pub fn solve_dense<T: Scalar>(mut a: Array2<Cplx<T>>, mut b: Array1<Cplx<T>>) -> Result<Array1<Cplx<T>>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(ReconError::Dimension(format!(
            "solve_dense expects square system, got {}x{} with rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let scale = a.iter().map(|v| v.norm()).fold(T::zero(), |m, v| if v > m { v } else { m });
    let tiny = T::of(1e-14) * if scale > T::zero() { scale } else { T::one() };
    for k in 0..n {
        let mut piv = k;
        let mut best = a[[k, k]].norm();
        for r in k + 1..n {
            let v = a[[r, k]].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= tiny {
            return Err(ReconError::Solver(format!("singular system (pivot {best} at column {k})")));
        }
        if piv != k {
            for c in 0..n {
                let tmp = a[[k, c]];
                a[[k, c]] = a[[piv, c]];
                a[[piv, c]] = tmp;
            }
            b.swap(k, piv);
        }
        let d = a[[k, k]];
        for r in k + 1..n {
            let f = a[[r, k]] / d;
            if f.norm_sqr() == T::zero() {
                continue;
            }
            for c in k + 1..n {
                let akc = a[[k, c]];
                a[[r, c]] -= f * akc;
            }
            let bk = b[k];
            b[r] -= f * bk;
        }
    }
    let mut x = Array1::from_elem(n, Cplx::new(T::zero(), T::zero()));
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc -= a[[k, c]] * x[c];
        }
        x[k] = acc / a[[k, k]];
    }
    Ok(x)
}

/// Solves the Hermitian system `g·v = rhs`, falling back to a ridge
/// `g + (1e-8·tr(g)/n)·I` when the plain solve detects (near) singularity.
/// A zero-trace (all-zero) system returns the zero vector. Returns the
/// solution and whether the ridge was engaged.
pub fn solve_hermitian_ridge<T: Scalar>(
    g: &Array2<Cplx<T>>,
    rhs: &Array1<Cplx<T>>,
) -> Result<(Array1<Cplx<T>>, bool)> {
    let n = g.nrows();
    let trace: T = (0..n).map(|i| g[[i, i]].re).sum();
    if trace <= T::zero() {
        return Ok((Array1::from_elem(n, Cplx::new(T::zero(), T::zero())), false));
    }
    match solve_dense(g.clone(), rhs.clone()) {
        Ok(v) => Ok((v, false)),
        Err(ReconError::Solver(_)) => {
            let ridge = T::of(1e-8) * trace / T::of(n as f64);
            let mut gr = g.clone();
            for i in 0..n {
                gr[[i, i]] += Cplx::new(ridge, T::zero());
            }
            Ok((solve_dense(gr, rhs.clone())?, true))
        }
        Err(e) => Err(e),
    }
}

/// Deterministic pseudo-random start vector for power iteration
/// (splitmix64-driven, independent of any external RNG state).
fn seed_vector<T: Scalar>(len: usize) -> Array1<Cplx<T>> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    Array1::from_shape_fn(len, |_| Cplx::new(T::of(next()), T::of(next())))
}

/// Largest eigenvalue of the Hermitian positive semidefinite operator
/// `apply` (dimension `len`) by power iteration: at most `iters` steps,
/// stopping early when the Rayleigh quotient stabilizes to `rel_tol`.
pub fn power_iteration<T: Scalar>(
    apply: impl Fn(&Array1<Cplx<T>>) -> Array1<Cplx<T>>,
    len: usize,
    iters: usize,
    rel_tol: T,
) -> T {
    let mut v = seed_vector::<T>(len);
    let nrm = crate::vec::norm(&v);
    v.mapv_inplace(|x| x / Cplx::new(nrm, T::zero()));
    let mut lambda = T::zero();
    for _ in 0..iters {
        let w = apply(&v);
        let next = crate::vec::rdot(&v, &w);
        let wn = crate::vec::norm(&w);
        if wn <= T::zero() {
            return T::zero();
        }
        v = w.mapv(|x| x / Cplx::new(wn, T::zero()));
        if lambda > T::zero() && (next - lambda).abs() <= rel_tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Scalars supporting small dense SVD (used for the unitary Procrustes
/// factor). Backed by nalgebra's pure-Rust SVD at each concrete precision.
pub trait SvdScalar: Scalar {
    /// Thin-full SVD of a square complex matrix: returns `(u, s, v)` with
    /// `m = u · diag(s) · vᴴ` and `u`, `v` unitary (deterministic completion
    /// of any null block comes from the factorization).
    fn svd_square(m: &Array2<Cplx<Self>>) -> (Array2<Cplx<Self>>, Vec<Self>, Array2<Cplx<Self>>);
}

macro_rules! impl_svd_scalar {
    ($t:ty) => {
        impl SvdScalar for $t {
            fn svd_square(m: &Array2<Cplx<$t>>) -> (Array2<Cplx<$t>>, Vec<$t>, Array2<Cplx<$t>>) {
                let d = m.nrows();
                assert_eq!(d, m.ncols(), "svd_square needs a square matrix");
                let nm = nalgebra::DMatrix::<Cplx<$t>>::from_fn(d, d, |r, c| m[[r, c]]);
                let svd = nm.svd(true, true);
                let u = svd.u.expect("svd with u");
                let vt = svd.v_t.expect("svd with v_t");
                let ua = Array2::from_shape_fn((d, d), |(r, c)| u[(r, c)]);
                // v_t holds Vᴴ; return V itself.
                let va = Array2::from_shape_fn((d, d), |(r, c)| vt[(c, r)].conj());
                let s = svd.singular_values.iter().copied().collect();
                (ua, s, va)
            }
        }
    };
}

impl_svd_scalar!(f32);
impl_svd_scalar!(f64);

/// Unitary factor `Ω = V·Uᴴ` minimizing `‖Ω·p − z‖_F` over unitary matrices,
/// where `U Σ Vᴴ` is the SVD of `p·zᴴ` (orthogonal Procrustes alignment of
/// patch matrix `p` onto code matrix `z`, both `d × P`).
pub fn procrustes_unitary<T: SvdScalar>(p: &Array2<Cplx<T>>, z: &Array2<Cplx<T>>) -> Result<Array2<Cplx<T>>> {
    if p.dim() != z.dim() {
        return Err(ReconError::Dimension(format!(
            "procrustes operands differ: {:?} vs {:?}",
            p.dim(),
            z.dim()
        )));
    }
    let d = p.nrows();
    // g = p·zᴴ (d × d)
    let mut g = Array2::from_elem((d, d), Cplx::new(T::zero(), T::zero()));
    for r in 0..d {
        for c in 0..d {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for k in 0..p.ncols() {
                acc += p[[r, k]] * z[[c, k]].conj();
            }
            g[[r, c]] = acc;
        }
    }
    // A zero cross matrix leaves every unitary equally good; return the
    // identity as the deterministic completion rather than depending on the
    // SVD backend's factors for the all-zero input.
    if g.iter().all(|v| v.norm_sqr() == T::zero()) {
        return Ok(Array2::from_shape_fn((d, d), |(r, c)| {
            if r == c { Cplx::new(T::one(), T::zero()) } else { Cplx::new(T::zero(), T::zero()) }
        }));
    }
    let (u, _s, v) = T::svd_square(&g);
    // Ω = V·Uᴴ
    let mut omega = Array2::from_elem((d, d), Cplx::new(T::zero(), T::zero()));
    for r in 0..d {
        for c in 0..d {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for k in 0..d {
                acc += v[[r, k]] * u[[c, k]].conj();
            }
            omega[[r, c]] = acc;
        }
    }
    Ok(omega)
}
