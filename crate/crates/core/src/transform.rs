//! Sparsifying linear transforms mapping an image to a coefficient vector:
//! identity, periodic 2-D finite differences, orthogonal Haar wavelets, and
//! stacked combinations, with optional per-coefficient weights for weighted
//! one-norm penalties.

use crate::error::{ReconError, Result};
use crate::num::{Cplx, Scalar};
use crate::potential::Potential;
use ndarray::{Array1, Array2, ArrayView1};

/// The linear map itself.
#[derive(Clone, Debug, PartialEq)]
pub enum TransformKind {
    /// Coefficients are the pixels (row-major).
    Identity,
    /// Periodic first differences along both axes; output stacks the
    /// axis-0 differences (length `N`) then the axis-1 differences.
    FiniteDiff2d,
    /// Orthogonal discrete Haar wavelet transform with the given number of
    /// decomposition levels. Grid dimensions must be powers of two.
    Odwt { levels: usize },
    /// Vertical concatenation of several maps.
    Stacked(Vec<TransformKind>),
}

/// A transform plus optional nonnegative per-coefficient weights. Weights do
/// not change the linear map; they scale the penalty applied to each
/// coefficient in weighted one-norm objectives.
#[derive(Clone, Debug, PartialEq)]
pub struct Transform<T: Scalar> {
    kind: TransformKind,
    weights: Option<Array1<T>>,
}

impl<T: Scalar> Transform<T> {
    pub fn identity() -> Self {
        Self { kind: TransformKind::Identity, weights: None }
    }

    pub fn finite_diff_2d() -> Self {
        Self { kind: TransformKind::FiniteDiff2d, weights: None }
    }

    pub fn odwt(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(ReconError::Config("wavelet transform needs at least one level".into()));
        }
        Ok(Self { kind: TransformKind::Odwt { levels }, weights: None })
    }

    pub fn stacked(parts: Vec<TransformKind>) -> Result<Self> {
        if parts.is_empty() {
            return Err(ReconError::Config("stacked transform needs at least one part".into()));
        }
        Ok(Self { kind: TransformKind::Stacked(parts), weights: None })
    }

    /// Attaches per-coefficient penalty weights (checked for shape at apply
    /// time; must be finite and nonnegative).
    pub fn with_weights(mut self, weights: Array1<T>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(ReconError::Config("coefficient weights must be finite and ≥ 0".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn weights(&self) -> Option<&Array1<T>> {
        self.weights.as_ref()
    }

    /// Length of the coefficient vector for an `nx × ny` grid; validates the
    /// grid against the transform's requirements.
    pub fn output_len(&self, nx: usize, ny: usize) -> Result<usize> {
        self.kind.output_len(nx, ny)
    }

    /// `T x` as a flat coefficient vector.
    pub fn apply(&self, x: &Array2<Cplx<T>>) -> Result<Array1<Cplx<T>>> {
        let (nx, ny) = x.dim();
        let k = self.output_len(nx, ny)?;
        if let Some(w) = &self.weights {
            if w.len() != k {
                return Err(ReconError::Dimension(format!(
                    "{} weights attached to a transform with {k} coefficients",
                    w.len()
                )));
            }
        }
        let mut out = Array1::zeros(k);
        self.kind.apply_into(x, out.view_mut());
        Ok(out)
    }

    /// `T' c` back on the image grid.
    pub fn apply_adjoint(&self, c: ArrayView1<'_, Cplx<T>>, nx: usize, ny: usize) -> Result<Array2<Cplx<T>>> {
        let k = self.output_len(nx, ny)?;
        if c.len() != k {
            return Err(ReconError::Dimension(format!(
                "coefficient vector has {} entries, transform expects {k}",
                c.len()
            )));
        }
        let mut out = Array2::zeros((nx, ny));
        self.kind.adjoint_into(c, &mut out);
        Ok(out)
    }

    /// Upper bound on `‖T‖²` (tight for the individual kinds): 1 for
    /// identity and wavelets, 8 for periodic finite differences, and the sum
    /// of parts for stacks.
    pub fn op_norm_sq_bound(&self) -> T {
        self.kind.op_norm_sq_bound()
    }

    /// `Some(c)` when `T'T = c·I` (orthogonal or tight-frame map): 1 for
    /// identity and the wavelet transform, sums across stacks when every
    /// part is tight.
    pub fn tight_frame_constant(&self) -> Option<T> {
        self.kind.tight_frame_constant()
    }

    /// Weighted one-norm of the coefficient vector `Σ_k w_k |c_k|`
    /// (unit weights when none are attached).
    pub fn weighted_l1(&self, c: &Array1<Cplx<T>>) -> T {
        match &self.weights {
            None => c.iter().map(|v| v.norm()).sum(),
            Some(w) => c.iter().zip(w.iter()).map(|(v, &w)| w * v.norm()).sum(),
        }
    }
}

impl TransformKind {
    fn output_len(&self, nx: usize, ny: usize) -> Result<usize> {
        let n = nx * ny;
        match self {
            Self::Identity => Ok(n),
            Self::FiniteDiff2d => Ok(2 * n),
            Self::Odwt { levels } => {
                if !nx.is_power_of_two() || !ny.is_power_of_two() {
                    return Err(ReconError::Config(format!(
                        "wavelet transform needs power-of-two grid dims, got {nx}x{ny}"
                    )));
                }
                let max_levels = nx.trailing_zeros().min(ny.trailing_zeros()) as usize;
                if *levels > max_levels {
                    return Err(ReconError::Config(format!(
                        "{levels} wavelet levels exceed the {max_levels} supported by a {nx}x{ny} grid"
                    )));
                }
                Ok(n)
            }
            Self::Stacked(parts) => {
                let mut total = 0;
                for p in parts {
                    total += p.output_len(nx, ny)?;
                }
                Ok(total)
            }
        }
    }

    fn apply_into<T: Scalar>(&self, x: &Array2<Cplx<T>>, mut out: ndarray::ArrayViewMut1<'_, Cplx<T>>) {
        let (nx, ny) = x.dim();
        let n = nx * ny;
        match self {
            Self::Identity => {
                for (o, &v) in out.iter_mut().zip(x.iter()) {
                    *o = v;
                }
            }
            Self::FiniteDiff2d => {
                for i in 0..nx {
                    for j in 0..ny {
                        let flat = i * ny + j;
                        out[flat] = x[[(i + 1) % nx, j]] - x[[i, j]];
                        out[n + flat] = x[[i, (j + 1) % ny]] - x[[i, j]];
                    }
                }
            }
            Self::Odwt { levels } => {
                let mut work = x.clone();
                haar_forward(&mut work, *levels);
                for (o, &v) in out.iter_mut().zip(work.iter()) {
                    *o = v;
                }
            }
            Self::Stacked(parts) => {
                let mut offset = 0;
                for p in parts {
                    let k = p.output_len(nx, ny).expect("validated by caller");
                    p.apply_into(x, out.slice_mut(ndarray::s![offset..offset + k]));
                    offset += k;
                }
            }
        }
    }

    fn adjoint_into<T: Scalar>(&self, c: ArrayView1<'_, Cplx<T>>, out: &mut Array2<Cplx<T>>) {
        let (nx, ny) = out.dim();
        let n = nx * ny;
        match self {
            Self::Identity => {
                for (o, &v) in out.iter_mut().zip(c.iter()) {
                    *o += v;
                }
            }
            Self::FiniteDiff2d => {
                for i in 0..nx {
                    for j in 0..ny {
                        let flat = i * ny + j;
                        let d0 = c[flat];
                        let d1 = c[n + flat];
                        // adjoint of x[(i+1)%nx, j] − x[i, j]
                        out[[(i + 1) % nx, j]] += d0;
                        out[[i, j]] -= d0;
                        out[[i, (j + 1) % ny]] += d1;
                        out[[i, j]] -= d1;
                    }
                }
            }
            Self::Odwt { levels } => {
                let mut work = Array2::from_shape_vec((nx, ny), c.to_vec()).expect("validated length");
                haar_inverse(&mut work, *levels);
                for (o, &v) in out.iter_mut().zip(work.iter()) {
                    *o += v;
                }
            }
            Self::Stacked(parts) => {
                let mut offset = 0;
                for p in parts {
                    let k = p.output_len(nx, ny).expect("validated by caller");
                    p.adjoint_into(c.slice(ndarray::s![offset..offset + k]), out);
                    offset += k;
                }
            }
        }
    }

    fn op_norm_sq_bound<T: Scalar>(&self) -> T {
        match self {
            Self::Identity | Self::Odwt { .. } => T::one(),
            Self::FiniteDiff2d => T::of(8.0),
            Self::Stacked(parts) => parts.iter().map(|p| p.op_norm_sq_bound()).sum(),
        }
    }

    fn tight_frame_constant<T: Scalar>(&self) -> Option<T> {
        match self {
            Self::Identity | Self::Odwt { .. } => Some(T::one()),
            Self::FiniteDiff2d => None,
            Self::Stacked(parts) => {
                let mut acc = T::zero();
                for p in parts {
                    acc += p.tight_frame_constant::<T>()?;
                }
                Some(acc)
            }
        }
    }
}

/// In-place orthonormal Haar analysis: at each level, rows then columns of
/// the current low-pass block are split into (sum, difference)/√2 halves.
fn haar_forward<T: Scalar>(x: &mut Array2<Cplx<T>>, levels: usize) {
    let (mut bx, mut by) = x.dim();
    let inv_sqrt2 = Cplx::new(T::of(0.5).sqrt(), T::zero());
    let mut buf: Vec<Cplx<T>> = Vec::new();
    for _ in 0..levels {
        // rows
        for i in 0..bx {
            buf.clear();
            buf.extend((0..by).map(|j| x[[i, j]]));
            for t in 0..by / 2 {
                x[[i, t]] = (buf[2 * t] + buf[2 * t + 1]) * inv_sqrt2;
                x[[i, by / 2 + t]] = (buf[2 * t] - buf[2 * t + 1]) * inv_sqrt2;
            }
        }
        // columns
        for j in 0..by {
            buf.clear();
            buf.extend((0..bx).map(|i| x[[i, j]]));
            for t in 0..bx / 2 {
                x[[t, j]] = (buf[2 * t] + buf[2 * t + 1]) * inv_sqrt2;
                x[[bx / 2 + t, j]] = (buf[2 * t] - buf[2 * t + 1]) * inv_sqrt2;
            }
        }
        bx /= 2;
        by /= 2;
    }
}

/// Exact inverse (= adjoint) of [`haar_forward`].
fn haar_inverse<T: Scalar>(x: &mut Array2<Cplx<T>>, levels: usize) {
    let (nx, ny) = x.dim();
    let inv_sqrt2 = Cplx::new(T::of(0.5).sqrt(), T::zero());
    let mut buf: Vec<Cplx<T>> = Vec::new();
    for level in (0..levels).rev() {
        let bx = nx >> level;
        let by = ny >> level;
        // columns
        for j in 0..by {
            buf.clear();
            buf.extend((0..bx).map(|i| x[[i, j]]));
            for t in 0..bx / 2 {
                x[[2 * t, j]] = (buf[t] + buf[bx / 2 + t]) * inv_sqrt2;
                x[[2 * t + 1, j]] = (buf[t] - buf[bx / 2 + t]) * inv_sqrt2;
            }
        }
        // rows
        for i in 0..bx {
            buf.clear();
            buf.extend((0..by).map(|j| x[[i, j]]));
            for t in 0..by / 2 {
                x[[i, 2 * t]] = (buf[t] + buf[by / 2 + t]) * inv_sqrt2;
                x[[i, 2 * t + 1]] = (buf[t] - buf[by / 2 + t]) * inv_sqrt2;
            }
        }
    }
}

/// Value of the Huber-composed regularizer `Σ_k huber_α((Tx)_k)`, the exact
/// result of minimizing `½‖Tx − z‖² + α‖z‖₁` over the auxiliary `z`.
pub fn huber_split_value<T: Scalar>(t: &Transform<T>, x: &Array2<Cplx<T>>, alpha: T) -> Result<T> {
    let huber = Potential::huber(alpha)?;
    let c = t.apply(x)?;
    Ok(c.iter().map(|&v| huber.value(v)).sum())
}
