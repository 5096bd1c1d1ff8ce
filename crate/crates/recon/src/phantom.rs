//! Deterministic test images: an analytic ellipse head phantom, a
//! piecewise-constant block scene, or an image loaded from a CPLX1 file.

use std::path::PathBuf;

use ndarray::Array2;
use recon_core::{Cplx, Image64};

use crate::error::{HarnessError, Result};
use crate::formats;

/// Which test image to rasterize.
#[derive(Clone, Debug, PartialEq)]
pub enum PhantomKind {
    /// The classic ten-ellipse head phantom with the high-contrast intensity
    /// set; magnitudes lie in [0, 1] with background 0.
    SheppLogan,
    /// Two rectangles on an empty background; piecewise constant, so almost
    /// all finite differences vanish.
    Blocks,
    /// A rank-2 CPLX1 file supplied by the user; magnitudes must already lie
    /// in [0, 1].
    File(PathBuf),
}

/// Full phantom description: kind, grid, and the optional smooth phase that
/// turns the real-valued scene into a complex one without changing its
/// magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    /// Grid rows; for [`PhantomKind::File`], 0 means "take it from the file".
    pub nx: usize,
    /// Grid columns; same file convention as `nx`.
    pub ny: usize,
    /// Apply a smooth spatial phase so the image is genuinely complex.
    pub complex: bool,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self { kind: PhantomKind::SheppLogan, nx: 64, ny: 64, complex: false }
    }
}

/// Ellipse table (semi-axes, center, rotation in degrees, additive
/// intensity) for the head phantom, using the widely used high-contrast
/// intensity variant whose sums stay inside [0, 1].
const HEAD_ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (0.69, 0.92, 0.0, 0.0, 0.0, 1.0),
    (0.6624, 0.874, 0.0, -0.0184, 0.0, -0.8),
    (0.11, 0.31, 0.22, 0.0, -18.0, -0.2),
    (0.16, 0.41, -0.22, 0.0, 18.0, -0.2),
    (0.21, 0.25, 0.0, 0.35, 0.0, 0.1),
    (0.046, 0.046, 0.0, 0.1, 0.0, 0.1),
    (0.046, 0.046, 0.0, -0.1, 0.0, 0.1),
    (0.046, 0.023, -0.08, -0.605, 0.0, 0.1),
    (0.023, 0.023, 0.0, -0.606, 0.0, 0.1),
    (0.023, 0.046, 0.06, -0.605, 0.0, 0.1),
];

/// Rectangles for the block scene as (row span, column span, value), spans
/// as fractions of the grid. Chosen small enough that a 64x64 rendering
/// keeps over 99% of its periodic finite differences exactly zero.
const BLOCKS: [(f64, f64, f64, f64, f64); 2] = [
    (0.20, 0.36, 0.25, 0.41, 0.45),
    (0.55, 0.70, 0.50, 0.65, 1.0),
];

fn head_value(u: f64, v: f64) -> f64 {
    let mut acc = 0.0;
    for &(a, b, x0, y0, phi_deg, amp) in &HEAD_ELLIPSES {
        let phi = phi_deg.to_radians();
        let (s, c) = phi.sin_cos();
        let x = v - x0;
        let y = u - y0;
        let xr = c * x + s * y;
        let yr = -s * x + c * y;
        if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
            acc += amp;
        }
    }
    // The scene is nonnegative by construction (overlapping intensities sum
    // to zero inside the ventricles); strip the cancellation dust so those
    // regions are exactly zero.
    if acc.abs() < 1e-12 {
        0.0
    } else {
        acc
    }
}

fn blocks_value(i: usize, j: usize, nx: usize, ny: usize) -> f64 {
    let mut val = 0.0;
    for &(r0, r1, c0, c1, amp) in &BLOCKS {
        let rows = (r0 * nx as f64).floor() as usize..(r1 * nx as f64).floor() as usize;
        let cols = (c0 * ny as f64).floor() as usize..(c1 * ny as f64).floor() as usize;
        if rows.contains(&i) && cols.contains(&j) {
            val = amp;
        }
    }
    val
}

/// Smooth unit-magnitude phase field used when a complex phantom is asked
/// for; low-order so it stays gentle across the field of view.
fn phase(u: f64, v: f64) -> Cplx<f64> {
    let angle = 0.35 * std::f64::consts::PI * u + 0.21 * std::f64::consts::PI * v + 0.4 * u * v;
    Cplx::new(angle.cos(), angle.sin())
}

/// Rasterizes the requested phantom at pixel centers over [-1, 1]^2.
///
/// The result is identical for identical specs (no randomness anywhere),
/// magnitudes lie in [0, 1], and the grid must be at least 8x8.
pub fn make_phantom(spec: &PhantomSpec) -> Result<Image64> {
    let base = match &spec.kind {
        PhantomKind::File(path) => {
            let img = formats::read_image(path)?;
            if spec.nx != 0 && spec.nx != img.nx() || spec.ny != 0 && spec.ny != img.ny() {
                return Err(HarnessError::Config(format!(
                    "phantom file is {}x{} but the configuration asks for {}x{}",
                    img.nx(),
                    img.ny(),
                    spec.nx,
                    spec.ny
                )));
            }
            let maxmag = img.data().iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            if !maxmag.is_finite() {
                return Err(HarnessError::Config("phantom file holds non-finite values".into()));
            }
            if maxmag == 0.0 {
                return Err(HarnessError::Config("phantom file is identically zero".into()));
            }
            if maxmag > 1.0 + 1e-9 {
                return Err(HarnessError::Config(format!(
                    "phantom file magnitudes reach {maxmag:.3e}; rescale them into [0, 1] first"
                )));
            }
            img
        }
        analytic => {
            let (nx, ny) = (spec.nx, spec.ny);
            if nx < 8 || ny < 8 {
                return Err(HarnessError::Config(format!(
                    "phantom grid must be at least 8x8, got {nx}x{ny}"
                )));
            }
            let data = Array2::from_shape_fn((nx, ny), |(i, j)| {
                // Pixel centers; row 0 maps to the top of the scene.
                let u = 1.0 - 2.0 * (i as f64 + 0.5) / nx as f64;
                let v = -1.0 + 2.0 * (j as f64 + 0.5) / ny as f64;
                let mag = match analytic {
                    PhantomKind::SheppLogan => head_value(u, v),
                    PhantomKind::Blocks => blocks_value(i, j, nx, ny),
                    PhantomKind::File(_) => unreachable!("handled above"),
                };
                Cplx::new(mag, 0.0)
            });
            Image64::new(data)?
        }
    };
    if base.nx() < 8 || base.ny() < 8 {
        return Err(HarnessError::Config(format!(
            "phantom grid must be at least 8x8, got {}x{}",
            base.nx(),
            base.ny()
        )));
    }
    if !spec.complex {
        return Ok(base);
    }
    let (nx, ny) = (base.nx(), base.ny());
    let data = Array2::from_shape_fn((nx, ny), |(i, j)| {
        let u = 1.0 - 2.0 * (i as f64 + 0.5) / nx as f64;
        let v = -1.0 + 2.0 * (j as f64 + 0.5) / ny as f64;
        base.data()[[i, j]] * phase(u, v)
    });
    Ok(Image64::new(data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use recon_core::Transform;
    use tempfile::tempdir;

    fn spec(kind: PhantomKind, n: usize) -> PhantomSpec {
        PhantomSpec { kind, nx: n, ny: n, complex: false }
    }

    #[test]
    fn head_phantom_peaks_at_one_with_empty_background() {
        let img = make_phantom(&spec(PhantomKind::SheppLogan, 64)).unwrap();
        let maxmag = img.data().iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert_eq!(maxmag, 1.0);
        let minval = img.data().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        assert!(minval >= 0.0, "negative intensity {minval}");
        for &(i, j) in &[(0, 0), (0, 63), (63, 0), (63, 63)] {
            assert_eq!(img.data()[[i, j]], Cplx::new(0.0, 0.0), "corner ({i},{j}) not background");
        }
        assert!(img.data().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn rasterization_is_bit_identical_across_calls() {
        for kind in [PhantomKind::SheppLogan, PhantomKind::Blocks] {
            let a = make_phantom(&spec(kind.clone(), 32)).unwrap();
            let b = make_phantom(&spec(kind, 32)).unwrap();
            assert_eq!(a.data(), b.data());
        }
        let c = make_phantom(&PhantomSpec { complex: true, ..Default::default() }).unwrap();
        let d = make_phantom(&PhantomSpec { complex: true, ..Default::default() }).unwrap();
        assert_eq!(c.data(), d.data());
    }

    #[test]
    fn block_scene_keeps_99_percent_of_finite_differences_at_zero() {
        let img = make_phantom(&spec(PhantomKind::Blocks, 64)).unwrap();
        let t = Transform::<f64>::finite_diff_2d();
        let d = t.apply(img.data()).unwrap();
        let zeros = d.iter().filter(|v| v.norm() == 0.0).count();
        let frac = zeros as f64 / d.len() as f64;
        assert!(frac >= 0.99, "only {frac:.4} of the differences are zero");
        let maxmag = img.data().iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert_eq!(maxmag, 1.0);
    }

    #[test]
    fn block_scene_has_two_distinct_levels_on_any_grid_of_at_least_eight() {
        for n in [8, 9, 16, 33] {
            let img = make_phantom(&spec(PhantomKind::Blocks, n)).unwrap();
            let mut levels: Vec<f64> = img.data().iter().map(|z| z.re).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            assert_eq!(levels, vec![0.0, 0.45, 1.0], "levels wrong at {n}x{n}");
        }
    }

    #[test]
    fn complex_flag_preserves_magnitudes_exactly_enough() {
        let re = make_phantom(&spec(PhantomKind::SheppLogan, 32)).unwrap();
        let cx = make_phantom(&PhantomSpec {
            kind: PhantomKind::SheppLogan,
            nx: 32,
            ny: 32,
            complex: true,
        })
        .unwrap();
        let mut nontrivial_phase = false;
        for (a, b) in re.data().iter().zip(cx.data().iter()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15);
            if b.im.abs() > 1e-12 {
                nontrivial_phase = true;
            }
        }
        assert!(nontrivial_phase, "complex phantom came out real");
    }

    #[test]
    fn small_grids_are_rejected() {
        let err = make_phantom(&spec(PhantomKind::SheppLogan, 7)).unwrap_err();
        assert!(err.to_string().contains("at least 8x8"), "{err}");
        assert!(make_phantom(&PhantomSpec { nx: 8, ny: 7, ..Default::default() }).is_err());
    }

    #[test]
    fn file_phantoms_round_trip_and_enforce_the_magnitude_range() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("truth.cplx1");
        let truth = make_phantom(&spec(PhantomKind::SheppLogan, 16)).unwrap();
        crate::formats::write_image(&p, &truth).unwrap();

        let loaded = make_phantom(&spec(PhantomKind::File(p.clone()), 16)).unwrap();
        assert_eq!(loaded.data(), truth.data());
        // Grid 0 means "whatever the file says".
        let auto = make_phantom(&PhantomSpec {
            kind: PhantomKind::File(p.clone()),
            nx: 0,
            ny: 0,
            complex: false,
        })
        .unwrap();
        assert_eq!(auto.nx(), 16);
        // A stated grid that disagrees with the file is an error.
        assert!(make_phantom(&spec(PhantomKind::File(p.clone()), 32)).is_err());

        let big = Image64::new(truth.data().mapv(|z| z * 3.0)).unwrap();
        let pb = dir.path().join("big.cplx1");
        crate::formats::write_image(&pb, &big).unwrap();
        let err = make_phantom(&spec(PhantomKind::File(pb), 16)).unwrap_err();
        assert!(err.to_string().contains("rescale"), "{err}");

        let pz = dir.path().join("zero.cplx1");
        crate::formats::write_image(&pz, &Image64::zeros(16, 16).unwrap()).unwrap();
        assert!(make_phantom(&spec(PhantomKind::File(pz), 16)).is_err());
    }
}
