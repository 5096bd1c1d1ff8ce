//! Domain value types: complex images, k-space sampling masks, coil
//! sensitivity maps, and multi-coil k-space sample vectors.

use crate::error::{ReconError, Result};
use crate::num::{Cplx, Scalar};
use ndarray::{Array2, Array3, ArrayView2};

fn check_finite_c<T: Scalar>(vals: impl IntoIterator<Item = Cplx<T>>, what: &str) -> Result<()> {
    for v in vals {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(ReconError::Config(format!("{what} contains non-finite entries")));
        }
    }
    Ok(())
}

/// Complex-valued image on an `nx × ny` Cartesian grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T: Scalar> {
    data: Array2<Cplx<T>>,
}

impl<T: Scalar> Image<T> {
    /// Wraps pixel data, validating that the grid is non-empty and every
    /// entry is finite.
    pub fn new(data: Array2<Cplx<T>>) -> Result<Self> {
        let (nx, ny) = data.dim();
        if nx == 0 || ny == 0 {
            return Err(ReconError::Dimension(format!("empty image grid {nx}x{ny}")));
        }
        check_finite_c(data.iter().copied(), "image")?;
        Ok(Self { data })
    }

    /// All-zero image.
    pub fn zeros(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(ReconError::Dimension(format!("empty image grid {nx}x{ny}")));
        }
        Ok(Self { data: Array2::zeros((nx, ny)) })
    }

    pub fn nx(&self) -> usize {
        self.data.nrows()
    }

    pub fn ny(&self) -> usize {
        self.data.ncols()
    }

    /// Total pixel count.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &Array2<Cplx<T>> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Cplx<T>> {
        self.data
    }
}

/// Boolean k-space sampling pattern on the full `nx × ny` grid.
///
/// Sampled locations are enumerated in a fixed row-major raster order (rows
/// are the first index); that ordering defines the layout of
/// [`KSpaceData`] sample vectors and is relied on by the file formats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    keep: Array2<bool>,
    count: usize,
}

impl SamplingMask {
    /// Wraps a boolean grid; at least one location must be sampled.
    pub fn new(keep: Array2<bool>) -> Result<Self> {
        let (nx, ny) = keep.dim();
        if nx == 0 || ny == 0 {
            return Err(ReconError::Dimension(format!("empty mask grid {nx}x{ny}")));
        }
        let count = keep.iter().filter(|&&k| k).count();
        if count == 0 {
            return Err(ReconError::Config("mask samples no k-space locations".into()));
        }
        Ok(Self { keep, count })
    }

    /// Fully sampled pattern.
    pub fn full(nx: usize, ny: usize) -> Result<Self> {
        Self::new(Array2::from_elem((nx, ny), true))
    }

    pub fn nx(&self) -> usize {
        self.keep.nrows()
    }

    pub fn ny(&self) -> usize {
        self.keep.ncols()
    }

    /// Number of sampled locations `M`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Fraction of the grid that is sampled.
    pub fn fraction(&self) -> f64 {
        self.count as f64 / (self.keep.len() as f64)
    }

    pub fn is_full(&self) -> bool {
        self.count == self.keep.len()
    }

    pub fn grid(&self) -> &Array2<bool> {
        &self.keep
    }

    /// Sampled `(kx, ky)` locations in the frozen row-major raster order.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.keep
            .indexed_iter()
            .filter(|(_, &k)| k)
            .map(|((i, j), _)| (i, j))
    }
}

/// Per-coil complex sensitivity maps, shape `(ncoils, nx, ny)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityMaps<T: Scalar> {
    maps: Array3<Cplx<T>>,
    normalized: bool,
}

impl<T: Scalar> SensitivityMaps<T> {
    /// Wraps coil maps. With `normalized` set, the per-pixel power
    /// `Σ_l |c_l|²` must equal one everywhere (tolerance `1e-6`).
    pub fn new(maps: Array3<Cplx<T>>, normalized: bool) -> Result<Self> {
        let (ncoils, nx, ny) = maps.dim();
        if ncoils == 0 || nx == 0 || ny == 0 {
            return Err(ReconError::Dimension(format!(
                "empty sensitivity maps {ncoils}x{nx}x{ny}"
            )));
        }
        check_finite_c(maps.iter().copied(), "sensitivity maps")?;
        let s = Self { maps, normalized };
        if normalized {
            let tol = T::of(1e-6);
            for &v in s.coil_power().iter() {
                if (v - T::one()).abs() > tol {
                    return Err(ReconError::Config(format!(
                        "maps flagged normalized but per-pixel power deviates from 1 (found {v})"
                    )));
                }
            }
        }
        Ok(s)
    }

    /// Uniform single-coil maps (identically one), trivially normalized.
    pub fn uniform(nx: usize, ny: usize) -> Result<Self> {
        let maps = Array3::from_elem((1, nx, ny), Cplx::new(T::one(), T::zero()));
        Self::new(maps, true)
    }

    pub fn ncoils(&self) -> usize {
        self.maps.dim().0
    }

    pub fn nx(&self) -> usize {
        self.maps.dim().1
    }

    pub fn ny(&self) -> usize {
        self.maps.dim().2
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// View of coil `l`'s map.
    pub fn coil(&self, l: usize) -> ArrayView2<'_, Cplx<T>> {
        self.maps.index_axis(ndarray::Axis(0), l)
    }

    /// Per-pixel power `Σ_l |c_l(j)|²`.
    pub fn coil_power(&self) -> Array2<T> {
        let (_, nx, ny) = self.maps.dim();
        let mut p = Array2::zeros((nx, ny));
        for l in 0..self.ncoils() {
            let c = self.coil(l);
            ndarray::Zip::from(&mut p).and(&c).for_each(|p, &c| *p += c.norm_sqr());
        }
        p
    }
}

/// Sampled multi-coil k-space data: an `M × ncoils` matrix of samples plus
/// the mask that produced it. Row `i` of every column corresponds to the
/// `i`-th sampled location in the mask's raster order.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceData<T: Scalar> {
    samples: Array2<Cplx<T>>,
    mask: SamplingMask,
}

impl<T: Scalar> KSpaceData<T> {
    pub fn new(samples: Array2<Cplx<T>>, mask: SamplingMask) -> Result<Self> {
        if samples.nrows() != mask.count() {
            return Err(ReconError::Dimension(format!(
                "k-space data has {} rows but mask samples {} locations",
                samples.nrows(),
                mask.count()
            )));
        }
        if samples.ncols() == 0 {
            return Err(ReconError::Dimension("k-space data has no coils".into()));
        }
        check_finite_c(samples.iter().copied(), "k-space data")?;
        Ok(Self { samples, mask })
    }

    /// Number of sampled locations per coil.
    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ncoils(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &Array2<Cplx<T>> {
        &self.samples
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_empty_and_nonfinite() {
        assert!(Image::<f64>::zeros(0, 4).is_err());
        let mut d = Array2::from_elem((2, 2), Cplx::new(0.0f64, 0.0));
        d[[1, 1]] = Cplx::new(f64::NAN, 0.0);
        assert!(Image::new(d).is_err());
    }

    #[test]
    fn mask_positions_are_row_major() {
        let mut keep = Array2::from_elem((2, 3), false);
        keep[[0, 2]] = true;
        keep[[1, 0]] = true;
        keep[[0, 0]] = true;
        let m = SamplingMask::new(keep).unwrap();
        let pos: Vec<_> = m.positions().collect();
        assert_eq!(pos, vec![(0, 0), (0, 2), (1, 0)]);
        assert_eq!(m.count(), 3);
        assert!(!m.is_full());
    }

    #[test]
    fn mask_rejects_empty_pattern() {
        let keep = Array2::from_elem((2, 2), false);
        assert!(SamplingMask::new(keep).is_err());
    }

    #[test]
    fn normalized_maps_validated() {
        let maps = Array3::from_elem((2, 2, 2), Cplx::new(0.5f64, 0.0));
        assert!(SensitivityMaps::new(maps.clone(), true).is_err());
        assert!(SensitivityMaps::new(maps, false).is_ok());
        let ok = Array3::from_elem((1, 2, 2), Cplx::new(0.0f64, 1.0));
        let s = SensitivityMaps::new(ok, true).unwrap();
        assert_eq!(s.ncoils(), 1);
        assert!((s.coil_power()[[0, 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kspace_shape_must_match_mask() {
        let mask = SamplingMask::full(2, 2).unwrap();
        let bad = Array2::from_elem((3, 1), Cplx::new(0.0f64, 0.0));
        assert!(KSpaceData::new(bad, mask.clone()).is_err());
        let good = Array2::from_elem((4, 2), Cplx::new(0.0f64, 0.0));
        let y = KSpaceData::new(good, mask).unwrap();
        assert_eq!(y.len(), 4);
        assert_eq!(y.ncoils(), 2);
    }
}
