//! Multi-coil Cartesian encoding operator `A`: per coil, pixelwise
//! multiplication by the coil sensitivity, a 2-D DFT, and subsampling at the
//! masked k-space locations. Includes the two closed-form inversions that
//! exist for structured masks: full-sampling coil combination and per-group
//! unfolding for every-nth-row masks.

use crate::error::{ReconError, Result};
use crate::fft::Fft2;
use crate::linalg;
use crate::num::{Cplx, Scalar};
use crate::types::{Image, KSpaceData, SamplingMask, SensitivityMaps};
use ndarray::{Array1, Array2};

/// DFT normalization used throughout: plain unnormalized forward DFT, so the
/// adjoint is the unnormalized inverse DFT and `F'F = N·I` on the full grid.
/// Fixed project-wide; carried on the operator so tests can pin it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FftConvention {
    UnnormalizedForward,
}

/// The encoding operator for one mask/coil-map pair. Immutable after
/// construction and safe to share across threads; FFT scratch space is
/// allocated per call.
#[derive(Debug)]
pub struct SystemOperator<T: Scalar> {
    mask: SamplingMask,
    smaps: SensitivityMaps<T>,
    fft: Fft2<T>,
    positions: Vec<(usize, usize)>,
    coil_power: Array2<T>,
    convention: FftConvention,
}

impl<T: Scalar> SystemOperator<T> {
    pub fn new(mask: SamplingMask, smaps: SensitivityMaps<T>) -> Result<Self> {
        if mask.nx() != smaps.nx() || mask.ny() != smaps.ny() {
            return Err(ReconError::Dimension(format!(
                "mask grid {}x{} does not match sensitivity grid {}x{}",
                mask.nx(),
                mask.ny(),
                smaps.nx(),
                smaps.ny()
            )));
        }
        let fft = Fft2::new(mask.nx(), mask.ny());
        let positions = mask.positions().collect();
        let coil_power = smaps.coil_power();
        Ok(Self { mask, smaps, fft, positions, coil_power, convention: FftConvention::UnnormalizedForward })
    }

    pub fn nx(&self) -> usize {
        self.mask.nx()
    }

    pub fn ny(&self) -> usize {
        self.mask.ny()
    }

    /// Pixel count `N`.
    pub fn n(&self) -> usize {
        self.mask.nx() * self.mask.ny()
    }

    /// Sample count per coil `M`.
    pub fn m(&self) -> usize {
        self.mask.count()
    }

    pub fn ncoils(&self) -> usize {
        self.smaps.ncoils()
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn smaps(&self) -> &SensitivityMaps<T> {
        &self.smaps
    }

    pub fn convention(&self) -> FftConvention {
        self.convention
    }

    /// Upper bound on the squared operator norm `‖A‖²`:
    /// `N · max_j Σ_l |c_l(j)|²`. For normalized maps this equals `N`, which
    /// is tight under full sampling and the standard step/majorizer constant
    /// under subsampling.
    pub fn lipschitz(&self) -> T {
        let pmax = self.coil_power.iter().copied().fold(T::zero(), |m, v| if v > m { v } else { m });
        T::of(self.n() as f64) * pmax
    }

    /// `A x`: masked per-coil k-space samples, shape `(M, ncoils)`.
    pub fn forward(&self, x: &Image<T>) -> Result<KSpaceData<T>> {
        if x.nx() != self.nx() || x.ny() != self.ny() {
            return Err(ReconError::Dimension(format!(
                "image {}x{} does not match operator grid {}x{}",
                x.nx(),
                x.ny(),
                self.nx(),
                self.ny()
            )));
        }
        let samples = self.forward_arr(x.data());
        KSpaceData::new(samples, self.mask.clone())
    }

    pub(crate) fn forward_arr(&self, x: &Array2<Cplx<T>>) -> Array2<Cplx<T>> {
        let mut out = Array2::zeros((self.m(), self.ncoils()));
        let mut tmp = Array2::zeros((self.nx(), self.ny()));
        for l in 0..self.ncoils() {
            let c = self.smaps.coil(l);
            ndarray::Zip::from(&mut tmp).and(x).and(&c).for_each(|t, &x, &c| *t = c * x);
            self.fft.forward(&mut tmp);
            for (i, &(kx, ky)) in self.positions.iter().enumerate() {
                out[[i, l]] = tmp[[kx, ky]];
            }
        }
        out
    }

    /// `A' y`: conjugate-sensitivity-weighted sum of zero-filled inverse
    /// DFTs (unnormalized, per the fixed convention).
    pub fn adjoint(&self, y: &KSpaceData<T>) -> Result<Image<T>> {
        if y.mask() != &self.mask {
            return Err(ReconError::Config(
                "k-space data was sampled with a different mask than this operator".into(),
            ));
        }
        Image::new(self.adjoint_arr(y.samples()))
    }

    pub(crate) fn adjoint_arr(&self, samples: &Array2<Cplx<T>>) -> Array2<Cplx<T>> {
        let mut acc = Array2::zeros((self.nx(), self.ny()));
        let mut grid = Array2::zeros((self.nx(), self.ny()));
        for l in 0..self.ncoils() {
            grid.fill(Cplx::new(T::zero(), T::zero()));
            for (i, &(kx, ky)) in self.positions.iter().enumerate() {
                grid[[kx, ky]] = samples[[i, l]];
            }
            self.fft.backward(&mut grid);
            let c = self.smaps.coil(l);
            ndarray::Zip::from(&mut acc).and(&grid).and(&c).for_each(|a, &g, &c| *a += c.conj() * g);
        }
        acc
    }

    /// `A'A x` without materializing k-space data: per coil, DFT, zeroing of
    /// unsampled locations, inverse DFT, conjugate-weighted sum.
    pub fn gram(&self, x: &Image<T>) -> Result<Image<T>> {
        if x.nx() != self.nx() || x.ny() != self.ny() {
            return Err(ReconError::Dimension(format!(
                "image {}x{} does not match operator grid {}x{}",
                x.nx(),
                x.ny(),
                self.nx(),
                self.ny()
            )));
        }
        Image::new(self.gram_arr(x.data()))
    }

    pub(crate) fn gram_arr(&self, x: &Array2<Cplx<T>>) -> Array2<Cplx<T>> {
        let zero = Cplx::new(T::zero(), T::zero());
        let mut acc = Array2::zeros((self.nx(), self.ny()));
        let mut tmp = Array2::zeros((self.nx(), self.ny()));
        for l in 0..self.ncoils() {
            let c = self.smaps.coil(l);
            ndarray::Zip::from(&mut tmp).and(x).and(&c).for_each(|t, &x, &c| *t = c * x);
            self.fft.forward(&mut tmp);
            ndarray::Zip::from(&mut tmp).and(self.mask.grid()).for_each(|t, &keep| {
                if !keep {
                    *t = zero;
                }
            });
            self.fft.backward(&mut tmp);
            ndarray::Zip::from(&mut acc).and(&tmp).and(&c).for_each(|a, &t, &c| *a += c.conj() * t);
        }
        acc
    }

    /// Gradient of the data term `½‖Ax − y‖²`: `A'(Ax − y) = gram(x) − A'y`.
    /// The `adjoint_y` argument is the precomputed `A'y`.
    pub(crate) fn data_grad_arr(&self, x: &Array2<Cplx<T>>, adjoint_y: &Array2<Cplx<T>>) -> Array2<Cplx<T>> {
        let mut g = self.gram_arr(x);
        ndarray::Zip::from(&mut g).and(adjoint_y).for_each(|g, &a| *g -= a);
        g
    }

    /// Data-term value `½‖Ax − y‖²`.
    pub(crate) fn data_cost_arr(&self, x: &Array2<Cplx<T>>, samples: &Array2<Cplx<T>>) -> T {
        let r = self.forward_arr(x);
        let mut acc = T::zero();
        ndarray::Zip::from(&r).and(samples).for_each(|&a, &b| acc += (a - b).norm_sqr());
        acc * T::of(0.5)
    }
}

/// Optimal coil combination for fully sampled data:
/// `x = (Σ_l |c_l|²)⁻¹ Σ_l conj(c_l)·F⁻¹y_l`, with pixels of vanishing
/// total sensitivity returned as zero. Errors on undersampled input.
pub fn coil_combine<T: Scalar>(y: &KSpaceData<T>, smaps: &SensitivityMaps<T>) -> Result<Image<T>> {
    let mask = y.mask();
    if !mask.is_full() {
        return Err(ReconError::Unsupported(
            "coil combination requires fully sampled k-space".into(),
        ));
    }
    check_geometry(y, smaps)?;
    let (nx, ny) = (mask.nx(), mask.ny());
    let n = T::of((nx * ny) as f64);
    let fft = Fft2::new(nx, ny);
    let mut num: Array2<Cplx<T>> = Array2::zeros((nx, ny));
    for l in 0..smaps.ncoils() {
        // full-mask raster order is exactly row-major order on the grid
        let col: Vec<Cplx<T>> = y.samples().column(l).to_vec();
        let mut grid = Array2::from_shape_vec((nx, ny), col).expect("full-grid column");
        fft.backward(&mut grid);
        let c = smaps.coil(l);
        ndarray::Zip::from(&mut num).and(&grid).and(&c).for_each(|a, &g, &c| {
            *a += c.conj() * g / n;
        });
    }
    let power = smaps.coil_power();
    ndarray::Zip::from(&mut num).and(&power).for_each(|v, &p| {
        *v = if p > T::zero() { *v / p } else { Cplx::new(T::zero(), T::zero()) };
    });
    Image::new(num)
}

/// Direct unfolding reconstruction for a mask that keeps every `n`-th row of
/// k-space. Solves the dense `n×n` aliasing system of each pixel group via
/// normal equations; near-singular groups are regularized with a relative
/// ridge of `1e-8·tr/n`. `n = 1` reduces to [`coil_combine`].
pub fn sense_block_solve<T: Scalar>(
    y: &KSpaceData<T>,
    smaps: &SensitivityMaps<T>,
    n: usize,
) -> Result<Image<T>> {
    check_geometry(y, smaps)?;
    let mask = y.mask();
    let (nx, ny) = (mask.nx(), mask.ny());
    if n == 0 {
        return Err(ReconError::Config("unfolding factor must be at least 1".into()));
    }
    if nx % n != 0 {
        return Err(ReconError::Config(format!(
            "unfolding factor {n} does not divide the {nx}-row grid"
        )));
    }
    for ((i, _), &keep) in mask.grid().indexed_iter() {
        if keep != (i % n == 0) {
            return Err(ReconError::Config(format!(
                "mask is not an exact every-{n}-rows pattern"
            )));
        }
    }
    let rows = nx / n;
    let fold = Fft2::new(rows, ny);
    let fold_scale = T::of((rows * ny) as f64);
    let ncoils = smaps.ncoils();
    // folded[l] = normalized inverse DFT of the sampled rows = the n-fold
    // aliased coil image
    let mut folded: Vec<Array2<Cplx<T>>> = Vec::with_capacity(ncoils);
    for l in 0..ncoils {
        let col: Vec<Cplx<T>> = y.samples().column(l).to_vec();
        let mut grid = Array2::from_shape_vec((rows, ny), col).expect("sampled rows reshape");
        fold.backward(&mut grid);
        grid.mapv_inplace(|v| v / Cplx::new(fold_scale, T::zero()));
        folded.push(grid);
    }
    let mut out: Array2<Cplx<T>> = Array2::zeros((nx, ny));
    let zero = Cplx::new(T::zero(), T::zero());
    let mut g: Array2<Cplx<T>> = Array2::zeros((n, n));
    let mut rhs: Array1<Cplx<T>> = Array1::zeros(n);
    for j1 in 0..rows {
        for j2 in 0..ny {
            // group pixels at rows j1 + m·rows; normal equations G v = rhs
            // with G = Sᴴ S, S[l, m] = c_l at group pixel m
            g.fill(zero);
            rhs.fill(zero);
            for l in 0..ncoils {
                let c = smaps.coil(l);
                let b = folded[l][[j1, j2]];
                for m1 in 0..n {
                    let cm1 = c[[j1 + m1 * rows, j2]];
                    rhs[m1] += cm1.conj() * b;
                    for m2 in 0..n {
                        let cm2 = c[[j1 + m2 * rows, j2]];
                        g[[m1, m2]] += cm1.conj() * cm2;
                    }
                }
            }
            let (v, _ridged) = linalg::solve_hermitian_ridge(&g, &rhs)?;
            for m in 0..n {
                out[[j1 + m * rows, j2]] = v[m];
            }
        }
    }
    Image::new(out)
}

fn check_geometry<T: Scalar>(y: &KSpaceData<T>, smaps: &SensitivityMaps<T>) -> Result<()> {
    if y.mask().nx() != smaps.nx() || y.mask().ny() != smaps.ny() {
        return Err(ReconError::Dimension(format!(
            "data grid {}x{} does not match sensitivity grid {}x{}",
            y.mask().nx(),
            y.mask().ny(),
            smaps.nx(),
            smaps.ny()
        )));
    }
    if y.ncoils() != smaps.ncoils() {
        return Err(ReconError::Dimension(format!(
            "data has {} coils but maps have {}",
            y.ncoils(),
            smaps.ncoils()
        )));
    }
    Ok(())
}
