//! Scalar abstraction: the whole crate is generic over the real floating-point
//! type, with `f64` as the working default and `f32` available for
//! reduced-precision runs.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar type underlying all complex arithmetic in this crate.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Shorthand for conversion from `f64` literals (tolerances, step-size
    /// constants, penalty defaults).
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 constant representable")
    }

    /// Conversion to `f64` for reporting (traces, summaries).
    fn f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex value over the crate scalar.
pub type Cplx<T> = Complex<T>;

/// `Complex::new` with both parts zero.
pub fn czero<T: Scalar>() -> Cplx<T> {
    Complex::new(T::zero(), T::zero())
}

/// Purely real complex value.
pub fn creal<T: Scalar>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_roundtrip_f32_f64() {
        assert_eq!(<f32 as Scalar>::of(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::of(0.5), 0.5f64);
        assert_eq!(Scalar::f64(1.25f32), 1.25f64);
    }
}
