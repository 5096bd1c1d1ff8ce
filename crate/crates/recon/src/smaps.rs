//! Synthetic coil sensitivity maps: smooth seeded profiles, pixelwise
//! normalized so the stacked maps satisfy `C'C = I` exactly. That identity
//! is what lets the solvers use the sharp `N·I` curvature bound, so it is
//! enforced by construction rather than by tolerance.

use std::path::PathBuf;

use ndarray::Array3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recon_core::{Cplx, SensitivityMaps64};

use crate::error::{HarnessError, Result};
use crate::formats;

/// Shape family for synthetic coil profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmapsProfile {
    /// Gaussian bumps centered on a ring around the field of view, with a
    /// gentle per-coil linear phase.
    Gaussian,
    /// Low-order complex polynomials `1 + a·u + b·v + c·uv`, kept far from
    /// zero by bounding the coefficients.
    Polynomial,
}

/// Coil-map request: synthesize `count` maps with `profile` and `seed`, or
/// load them from a rank-3 CPLX1 `file` (which overrides the other fields).
#[derive(Clone, Debug, PartialEq)]
pub struct SmapsSpec {
    pub count: usize,
    pub profile: SmapsProfile,
    pub seed: u64,
    pub file: Option<PathBuf>,
}

impl Default for SmapsSpec {
    fn default() -> Self {
        Self { count: 4, profile: SmapsProfile::Gaussian, seed: 0, file: None }
    }
}

fn pixel_coords(i: usize, j: usize, nx: usize, ny: usize) -> (f64, f64) {
    let u = 1.0 - 2.0 * (i as f64 + 0.5) / nx as f64;
    let v = -1.0 + 2.0 * (j as f64 + 0.5) / ny as f64;
    (u, v)
}

/// Builds the requested coil maps on an `nx` x `ny` grid.
///
/// Synthetic maps are strictly nonzero before normalization, so the
/// pixelwise division is always defined; generation is reproducible from
/// the seed. Loaded maps keep their own scaling, with the normalized flag
/// detected from the data.
pub fn make_smaps(spec: &SmapsSpec, nx: usize, ny: usize) -> Result<SensitivityMaps64> {
    if let Some(path) = &spec.file {
        let maps = formats::read_smaps(path)?;
        if maps.nx() != nx || maps.ny() != ny {
            return Err(HarnessError::Config(format!(
                "coil map file is {}x{} but the experiment grid is {nx}x{ny}",
                maps.nx(),
                maps.ny()
            )));
        }
        return Ok(maps);
    }
    let l = spec.count;
    if l == 0 {
        return Err(HarnessError::Config("at least one coil map is required".into()));
    }
    if nx == 0 || ny == 0 {
        return Err(HarnessError::Config("coil map grid must be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut maps = Array3::from_elem((l, nx, ny), Cplx::new(0.0, 0.0));
    match spec.profile {
        SmapsProfile::Gaussian => {
            let ring_offset: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            for coil in 0..l {
                let angle = std::f64::consts::TAU * coil as f64 / l as f64 + ring_offset;
                let (cu, cv) = (0.65 * angle.sin(), 0.65 * angle.cos());
                let (p, q): (f64, f64) = (rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
                for i in 0..nx {
                    for j in 0..ny {
                        let (u, v) = pixel_coords(i, j, nx, ny);
                        let d2 = (u - cu).powi(2) + (v - cv).powi(2);
                        let mag = (-d2 / 1.8).exp();
                        let ph = p * u + q * v;
                        maps[[coil, i, j]] = Cplx::from_polar(mag, ph);
                    }
                }
            }
        }
        SmapsProfile::Polynomial => {
            for coil in 0..l {
                let a: f64 = rng.random_range(-0.25..0.25);
                let b: f64 = rng.random_range(-0.25..0.25);
                let c: f64 = rng.random_range(-0.25..0.25);
                let (p, q): (f64, f64) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
                for i in 0..nx {
                    for j in 0..ny {
                        let (u, v) = pixel_coords(i, j, nx, ny);
                        let mag = 1.0 + a * u + b * v + c * u * v;
                        let ph = p * u + q * v;
                        maps[[coil, i, j]] = Cplx::from_polar(mag, ph);
                    }
                }
            }
        }
    }
    // Pixelwise normalization: every pixel's total power becomes exactly 1.
    for i in 0..nx {
        for j in 0..ny {
            let power: f64 = (0..l).map(|c| maps[[c, i, j]].norm_sqr()).sum();
            let scale = 1.0 / power.sqrt();
            for c in 0..l {
                maps[[c, i, j]] *= scale;
            }
        }
    }
    Ok(SensitivityMaps64::new(maps, true)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn maps_are_pixelwise_orthonormal() {
        for profile in [SmapsProfile::Gaussian, SmapsProfile::Polynomial] {
            let spec = SmapsSpec { count: 4, profile, seed: 11, file: None };
            let maps = make_smaps(&spec, 24, 20).unwrap();
            assert!(maps.normalized());
            for &p in maps.coil_power().iter() {
                assert!((p - 1.0).abs() <= 1e-12, "power {p}");
            }
        }
    }

    #[test]
    fn generation_is_seeded_and_deterministic() {
        let spec = SmapsSpec { count: 3, profile: SmapsProfile::Gaussian, seed: 5, file: None };
        let a = make_smaps(&spec, 16, 16).unwrap();
        let b = make_smaps(&spec, 16, 16).unwrap();
        for l in 0..3 {
            assert_eq!(a.coil(l), b.coil(l));
        }
        let c = make_smaps(&SmapsSpec { seed: 6, ..spec }, 16, 16).unwrap();
        assert_ne!(a.coil(0), c.coil(0));
    }

    #[test]
    fn single_coil_maps_have_unit_magnitude() {
        let spec = SmapsSpec { count: 1, profile: SmapsProfile::Gaussian, seed: 0, file: None };
        let maps = make_smaps(&spec, 12, 12).unwrap();
        for v in maps.coil(0).iter() {
            assert!((v.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn coils_differ_from_each_other() {
        let spec = SmapsSpec { count: 4, ..Default::default() };
        let maps = make_smaps(&spec, 16, 16).unwrap();
        let d: f64 = maps
            .coil(0)
            .iter()
            .zip(maps.coil(1).iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(d > 1e-2, "coil 0 and 1 nearly identical (distance {d})");
    }

    #[test]
    fn file_maps_round_trip_and_must_match_the_grid() {
        let dir = tempdir().unwrap();
        let spec = SmapsSpec { count: 2, profile: SmapsProfile::Polynomial, seed: 3, file: None };
        let maps = make_smaps(&spec, 16, 12).unwrap();
        let p = dir.path().join("smaps.cplx1");
        formats::write_smaps(&p, &maps).unwrap();

        let loaded = make_smaps(
            &SmapsSpec { file: Some(p.clone()), ..Default::default() },
            16,
            12,
        )
        .unwrap();
        assert!(loaded.normalized(), "normalization not detected on load");
        for l in 0..2 {
            assert_eq!(loaded.coil(l), maps.coil(l));
        }
        let err = make_smaps(&SmapsSpec { file: Some(p), ..Default::default() }, 8, 8).unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
    }

    #[test]
    fn zero_coils_are_rejected() {
        let err = make_smaps(&SmapsSpec { count: 0, ..Default::default() }, 8, 8).unwrap_err();
        assert!(err.to_string().contains("at least one"), "{err}");
    }
}
