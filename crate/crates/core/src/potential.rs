//! Scalar potential functions applied elementwise to complex transform
//! coefficients, with gradients (where smooth) and proximal maps.
//!
//! All potentials are radial — functions of `|z|` alone — so gradients point
//! along `z` and proximal maps shrink the magnitude while preserving phase.

use crate::error::{ReconError, Result};
use crate::num::{Cplx, Scalar};

/// Elementwise penalty applied to transform coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential<T: Scalar> {
    /// `ψ(z) = |z|²/2`
    Quadratic,
    /// Fair potential `ψ(z) = δ²(|z|/δ − log(1 + |z|/δ))`: quadratic near
    /// zero, asymptotically linear, everywhere smooth.
    Fair { delta: T },
    /// Smoothed absolute value `ψ(z) = sqrt(|z|² + ε²) − ε` (zero at zero).
    Hyperbola { eps: T },
    /// `ψ(z) = |z|²/2` for `|z| ≤ α`, else `α|z| − α²/2`.
    Huber { alpha: T },
    /// `ψ(z) = |z|` (nonsmooth; gradient unsupported, prox is the soft
    /// threshold).
    Abs,
}

impl<T: Scalar> Potential<T> {
    pub fn fair(delta: T) -> Result<Self> {
        if delta <= T::zero() || !delta.is_finite() {
            return Err(ReconError::Config(format!("fair potential needs δ > 0, got {delta}")));
        }
        Ok(Self::Fair { delta })
    }

    pub fn hyperbola(eps: T) -> Result<Self> {
        if eps <= T::zero() || !eps.is_finite() {
            return Err(ReconError::Config(format!("hyperbola potential needs ε > 0, got {eps}")));
        }
        Ok(Self::Hyperbola { eps })
    }

    pub fn huber(alpha: T) -> Result<Self> {
        if alpha <= T::zero() || !alpha.is_finite() {
            return Err(ReconError::Config(format!("huber potential needs α > 0, got {alpha}")));
        }
        Ok(Self::Huber { alpha })
    }

    /// Potential value at `z`. Zero at `z = 0` for every kind.
    pub fn value(&self, z: Cplx<T>) -> T {
        let r = z.norm();
        match *self {
            Self::Quadratic => r * r * T::of(0.5),
            Self::Fair { delta } => {
                let t = r / delta;
                delta * delta * (t - (T::one() + t).ln())
            }
            Self::Hyperbola { eps } => (r * r + eps * eps).sqrt() - eps,
            Self::Huber { alpha } => {
                if r <= alpha {
                    r * r * T::of(0.5)
                } else {
                    alpha * r - alpha * alpha * T::of(0.5)
                }
            }
            Self::Abs => r,
        }
    }

    /// True for every kind except [`Potential::Abs`].
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Self::Abs)
    }

    /// Gradient at `z` (the direction of steepest ascent of the real-valued
    /// potential over the complex plane). Errors for the nonsmooth absolute
    /// value.
    pub fn grad(&self, z: Cplx<T>) -> Result<Cplx<T>> {
        if !self.is_smooth() {
            return Err(ReconError::Unsupported(
                "gradient of the absolute-value potential is undefined at the origin".into(),
            ));
        }
        Ok(self.grad_raw(z))
    }

    /// Gradient for smooth kinds; must not be called on `Abs`.
    pub(crate) fn grad_raw(&self, z: Cplx<T>) -> Cplx<T> {
        match *self {
            Self::Quadratic => z,
            Self::Fair { delta } => z / Cplx::new(T::one() + z.norm() / delta, T::zero()),
            Self::Hyperbola { eps } => z / Cplx::new((z.norm_sqr() + eps * eps).sqrt(), T::zero()),
            Self::Huber { alpha } => {
                let r = z.norm();
                if r <= alpha {
                    z
                } else {
                    z * Cplx::new(alpha / r, T::zero())
                }
            }
            Self::Abs => unreachable!("gradient of abs"),
        }
    }

    /// Upper bound on the curvature of `ψ` (Lipschitz constant of the
    /// gradient); `None` for the nonsmooth absolute value.
    pub fn curvature_bound(&self) -> Option<T> {
        match *self {
            Self::Quadratic | Self::Fair { .. } | Self::Huber { .. } => Some(T::one()),
            Self::Hyperbola { eps } => Some(T::one() / eps),
            Self::Abs => None,
        }
    }

    /// Proximal map `argmin_x ½|x − z|² + t·ψ(x)` for step `t ≥ 0`.
    ///
    /// Closed forms for quadratic (damping), huber (damping/shrinkage), and
    /// abs (soft threshold); a safeguarded scalar bisection on the magnitude
    /// for the remaining smooth kinds.
    pub fn prox(&self, z: Cplx<T>, t: T) -> Cplx<T> {
        debug_assert!(t >= T::zero());
        let r = z.norm();
        match *self {
            Self::Quadratic => z / Cplx::new(T::one() + t, T::zero()),
            Self::Abs => soft_threshold(z, t),
            Self::Huber { alpha } => {
                // quadratic branch applies while the damped magnitude stays ≤ α
                if r <= alpha * (T::one() + t) {
                    z / Cplx::new(T::one() + t, T::zero())
                } else {
                    // linear branch: shrink magnitude by t·α (never crosses zero here)
                    z * Cplx::new((r - t * alpha) / r, T::zero())
                }
            }
            Self::Fair { .. } | Self::Hyperbola { .. } => {
                if r == T::zero() {
                    return z;
                }
                // minimize on the ray: m ↦ ½(m−r)² + t·ψ(m); the optimum
                // solves m + t·ψ'(m) = r with m ∈ [0, r]
                let f = |m: T| {
                    let g = self.grad_raw(Cplx::new(m, T::zero())).re;
                    m + t * g - r
                };
                let mut lo = T::zero();
                let mut hi = r;
                for _ in 0..120 {
                    let mid = (lo + hi) * T::of(0.5);
                    if f(mid) > T::zero() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let m = (lo + hi) * T::of(0.5);
                z * Cplx::new(m / r, T::zero())
            }
        }
    }
}

/// Complex soft threshold: `z·max(|z| − c, 0)/|z|`, mapping zero to zero.
pub fn soft_threshold<T: Scalar>(z: Cplx<T>, c: T) -> Cplx<T> {
    let r = z.norm();
    if r <= c {
        Cplx::new(T::zero(), T::zero())
    } else {
        z * Cplx::new((r - c) / r, T::zero())
    }
}
