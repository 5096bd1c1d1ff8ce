//! Two-dimensional DFT helpers on complex images.
//!
//! Convention (frozen project-wide): `forward` is the plain unnormalized DFT
//! in both dimensions, and `backward` is the plain unnormalized inverse DFT,
//! which equals the adjoint (conjugate transpose) of `forward`. Consequently
//! `backward(forward(x)) = N·x` with `N = nx·ny`, and on a fully sampled grid
//! the Gram operator of the DFT is exactly `N·I`.

use crate::num::{Cplx, Scalar};
use ndarray::Array2;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Planned 2-D FFT for one grid size. Immutable after construction; safe for
/// concurrent use (scratch space is allocated per call).
pub struct Fft2<T: Scalar> {
    nx: usize,
    ny: usize,
    fwd_row: Arc<dyn Fft<T>>,
    fwd_col: Arc<dyn Fft<T>>,
    inv_row: Arc<dyn Fft<T>>,
    inv_col: Arc<dyn Fft<T>>,
}

impl<T: Scalar> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl<T: Scalar> Fft2<T> {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "empty FFT grid");
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_row: planner.plan_fft_forward(ny),
            fwd_col: planner.plan_fft_forward(nx),
            inv_row: planner.plan_fft_inverse(ny),
            inv_col: planner.plan_fft_inverse(nx),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Grid size `N = nx·ny`, the round-trip scale factor.
    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    fn apply(&self, data: &mut Array2<Cplx<T>>, row_plan: &Arc<dyn Fft<T>>, col_plan: &Arc<dyn Fft<T>>) {
        assert_eq!(data.dim(), (self.nx, self.ny), "grid size mismatch");
        let mut scratch =
            vec![Cplx::new(T::zero(), T::zero()); row_plan.get_inplace_scratch_len().max(col_plan.get_inplace_scratch_len())];
        for mut row in data.rows_mut() {
            let slice = row.as_slice_mut().expect("image rows are contiguous");
            row_plan.process_with_scratch(slice, &mut scratch);
        }
        let mut col = vec![Cplx::new(T::zero(), T::zero()); self.nx];
        for j in 0..self.ny {
            for (i, v) in col.iter_mut().enumerate() {
                *v = data[[i, j]];
            }
            col_plan.process_with_scratch(&mut col, &mut scratch);
            for (i, v) in col.iter().enumerate() {
                data[[i, j]] = *v;
            }
        }
    }

    /// In-place unnormalized forward DFT over both axes.
    pub fn forward(&self, data: &mut Array2<Cplx<T>>) {
        self.apply(data, &self.fwd_row, &self.fwd_col);
    }

    /// In-place unnormalized inverse DFT over both axes — the exact adjoint
    /// of [`forward`](Self::forward). `backward(forward(x)) = N·x`.
    pub fn backward(&self, data: &mut Array2<Cplx<T>>) {
        self.apply(data, &self.inv_row, &self.inv_col);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec;
    use ndarray::Array2;

    fn test_image(nx: usize, ny: usize) -> Array2<Cplx<f64>> {
        Array2::from_shape_fn((nx, ny), |(i, j)| {
            Cplx::new(
                ((3 * i + 7 * j) % 11) as f64 / 11.0 - 0.3,
                ((5 * i + 2 * j) % 13) as f64 / 13.0,
            )
        })
    }

    #[test]
    fn roundtrip_scales_by_n() {
        let (nx, ny) = (6, 5);
        let x = test_image(nx, ny);
        let fft = Fft2::new(nx, ny);
        let mut z = x.clone();
        fft.forward(&mut z);
        fft.backward(&mut z);
        let n = (nx * ny) as f64;
        let err = z
            .iter()
            .zip(x.iter())
            .map(|(a, b)| (a - b * n).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-10, "round trip error {err}");
    }

    #[test]
    fn forward_matches_direct_dft() {
        let (nx, ny) = (4, 3);
        let x = test_image(nx, ny);
        let fft = Fft2::new(nx, ny);
        let mut z = x.clone();
        fft.forward(&mut z);
        for k1 in 0..nx {
            for k2 in 0..ny {
                let mut acc = Cplx::new(0.0, 0.0);
                for n1 in 0..nx {
                    for n2 in 0..ny {
                        let ph = -2.0
                            * std::f64::consts::PI
                            * (k1 as f64 * n1 as f64 / nx as f64 + k2 as f64 * n2 as f64 / ny as f64);
                        acc += x[[n1, n2]] * Cplx::new(ph.cos(), ph.sin());
                    }
                }
                assert!((acc - z[[k1, k2]]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn backward_is_adjoint_of_forward() {
        let (nx, ny) = (5, 4);
        let fft = Fft2::new(nx, ny);
        let a = test_image(nx, ny);
        let b = test_image(nx, ny).mapv(|v| v * Cplx::new(0.3, -1.1));
        let mut fa = a.clone();
        fft.forward(&mut fa);
        let mut fb = b.clone();
        fft.backward(&mut fb);
        // <F a, b> == <a, F' b>
        let lhs = vec::cdot(&fa, &b);
        let rhs = vec::cdot(&a, &fb);
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
