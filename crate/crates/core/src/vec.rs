//! Inner products, norms, and elementwise helpers on complex ndarray arrays
//! of any dimensionality.

use crate::num::{Cplx, Scalar};
use ndarray::{Array, ArrayBase, Data, Dimension};

/// Complex inner product `⟨a, b⟩ = Σ conj(a_i)·b_i`.
pub fn cdot<T: Scalar, S1, S2, D>(a: &ArrayBase<S1, D>, b: &ArrayBase<S2, D>) -> Cplx<T>
where
    S1: Data<Elem = Cplx<T>>,
    S2: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    debug_assert_eq!(a.shape(), b.shape());
    let mut acc = Cplx::new(T::zero(), T::zero());
    ndarray::Zip::from(a).and(b).for_each(|&x, &y| acc += x.conj() * y);
    acc
}

/// Real part of the complex inner product.
pub fn rdot<T: Scalar, S1, S2, D>(a: &ArrayBase<S1, D>, b: &ArrayBase<S2, D>) -> T
where
    S1: Data<Elem = Cplx<T>>,
    S2: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    cdot(a, b).re
}

/// Squared Euclidean norm `Σ |a_i|²`.
pub fn norm_sq<T: Scalar, S, D>(a: &ArrayBase<S, D>) -> T
where
    S: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    let mut acc = T::zero();
    a.iter().for_each(|v| acc += v.norm_sqr());
    acc
}

/// Euclidean norm.
pub fn norm<T: Scalar, S, D>(a: &ArrayBase<S, D>) -> T
where
    S: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    norm_sq(a).sqrt()
}

/// Largest entry magnitude `max_i |a_i|`.
pub fn max_abs<T: Scalar, S, D>(a: &ArrayBase<S, D>) -> T
where
    S: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    a.iter().map(|v| v.norm()).fold(T::zero(), |m, v| if v > m { v } else { m })
}

/// True when every entry has finite real and imaginary parts.
pub fn all_finite<T: Scalar, S, D>(a: &ArrayBase<S, D>) -> bool
where
    S: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    a.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// `y += alpha · x` with a real coefficient.
pub fn axpy<T: Scalar, S, D>(alpha: T, x: &ArrayBase<S, D>, y: &mut Array<Cplx<T>, D>)
where
    S: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    ndarray::Zip::from(y).and(x).for_each(|y, &x| {
        y.re += alpha * x.re;
        y.im += alpha * x.im;
    });
}

/// `a - b`, elementwise.
pub fn sub<T: Scalar, S1, S2, D>(a: &ArrayBase<S1, D>, b: &ArrayBase<S2, D>) -> Array<Cplx<T>, D>
where
    S1: Data<Elem = Cplx<T>>,
    S2: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    let mut out = a.to_owned();
    ndarray::Zip::from(&mut out).and(b).for_each(|o, &b| *o -= b);
    out
}

/// Relative error `‖a − reference‖ / ‖reference‖` (root-mean-square sense).
/// Returns the absolute norm of `a` when the reference is identically zero.
pub fn nrmse<T: Scalar, S1, S2, D>(a: &ArrayBase<S1, D>, reference: &ArrayBase<S2, D>) -> T
where
    S1: Data<Elem = Cplx<T>>,
    S2: Data<Elem = Cplx<T>>,
    D: Dimension,
{
    let den = norm(reference);
    let num = norm(&sub(a, reference));
    if den == T::zero() {
        num
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn inner_product_conjugates_first_argument() {
        let a = array![Cplx::new(0.0f64, 1.0)];
        let b = array![Cplx::new(2.0f64, 0.0)];
        // conj(i)·2 = -2i
        assert_eq!(cdot(&a, &b), Cplx::new(0.0, -2.0));
        assert_eq!(rdot(&a, &b), 0.0);
    }

    #[test]
    fn nrmse_against_zero_reference_is_absolute() {
        let a = array![Cplx::new(3.0f64, 4.0)];
        let z = array![Cplx::new(0.0f64, 0.0)];
        assert!((nrmse(&a, &z) - 5.0).abs() < 1e-15);
        assert!((nrmse(&a, &a)).abs() < 1e-15);
    }
}
