//! Shared test fixtures: seeded random instances and a dense realization of
//! the encoding matrix built directly from its definition (phase factors
//! times sensitivities), independent of the FFT-based implementation.

#![allow(dead_code)]

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recon_core::{SamplingMask, SensitivityMaps};

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_cplx(rng: &mut ChaCha8Rng) -> C {
    Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn rand_image(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> Array2<C> {
    Array2::from_shape_fn((nx, ny), |_| rand_cplx(rng))
}

pub fn rand_vec(rng: &mut ChaCha8Rng, len: usize) -> Array1<C> {
    Array1::from_shape_fn(len, |_| rand_cplx(rng))
}

/// Random mask with roughly the given sampling fraction (at least one sample).
pub fn rand_mask(rng: &mut ChaCha8Rng, nx: usize, ny: usize, frac: f64) -> SamplingMask {
    let mut keep = Array2::from_shape_fn((nx, ny), |_| rng.random_bool(frac));
    if !keep.iter().any(|&k| k) {
        keep[[0, 0]] = true;
    }
    SamplingMask::new(keep).unwrap()
}

/// Smooth random coil maps; `normalized` rescales to unit per-pixel power.
pub fn rand_maps(rng: &mut ChaCha8Rng, ncoils: usize, nx: usize, ny: usize, normalized: bool) -> SensitivityMaps<f64> {
    let centers: Vec<(f64, f64, f64)> = (0..ncoils)
        .map(|_| {
            (
                rng.random_range(-0.2..1.2),
                rng.random_range(-0.2..1.2),
                rng.random_range(0.3..1.0),
            )
        })
        .collect();
    let mut maps = Array3::from_shape_fn((ncoils, nx, ny), |(l, i, j)| {
        let u = i as f64 / nx as f64;
        let v = j as f64 / ny as f64;
        let (cu, cv, w) = centers[l];
        let amp = 0.2 + (-((u - cu).powi(2) + (v - cv).powi(2)) / w).exp();
        let ph = 1.7 * (u * (l as f64 + 1.0) - v * 0.6);
        Complex::from_polar(amp, ph)
    });
    if normalized {
        for i in 0..nx {
            for j in 0..ny {
                let p: f64 = (0..ncoils).map(|l| maps[[l, i, j]].norm_sqr()).sum();
                let s = p.sqrt();
                for l in 0..ncoils {
                    maps[[l, i, j]] = maps[[l, i, j]] / s;
                }
            }
        }
    }
    SensitivityMaps::new(maps, normalized).unwrap()
}

/// Dense `M × N` realization of coil `l`'s block of the encoding matrix,
/// entry by entry from the definition: the DFT phase at each sampled
/// location times the coil sensitivity at each pixel.
pub fn dense_coil_block(mask: &SamplingMask, smaps: &SensitivityMaps<f64>, l: usize) -> Array2<C> {
    let (nx, ny) = (mask.nx(), mask.ny());
    let positions: Vec<(usize, usize)> = mask.positions().collect();
    let c = smaps.coil(l);
    Array2::from_shape_fn((positions.len(), nx * ny), |(r, col)| {
        let (kx, ky) = positions[r];
        let (i1, i2) = (col / ny, col % ny);
        let ph = -2.0
            * std::f64::consts::PI
            * (kx as f64 * i1 as f64 / nx as f64 + ky as f64 * i2 as f64 / ny as f64);
        Complex::from_polar(1.0, ph) * c[[i1, i2]]
    })
}

/// All coil blocks stacked vertically: the full dense `(M·L) × N` matrix.
pub fn dense_full(mask: &SamplingMask, smaps: &SensitivityMaps<f64>) -> Array2<C> {
    let m = mask.count();
    let n = mask.nx() * mask.ny();
    let l = smaps.ncoils();
    let mut a = Array2::from_elem((m * l, n), Complex::new(0.0, 0.0));
    for li in 0..l {
        let block = dense_coil_block(mask, smaps, li);
        a.slice_mut(ndarray::s![li * m..(li + 1) * m, ..]).assign(&block);
    }
    a
}

pub fn matvec(a: &Array2<C>, x: &Array1<C>) -> Array1<C> {
    assert_eq!(a.ncols(), x.len());
    Array1::from_shape_fn(a.nrows(), |r| {
        let mut acc = Complex::new(0.0, 0.0);
        for c in 0..a.ncols() {
            acc += a[[r, c]] * x[c];
        }
        acc
    })
}

pub fn adjvec(a: &Array2<C>, y: &Array1<C>) -> Array1<C> {
    assert_eq!(a.nrows(), y.len());
    Array1::from_shape_fn(a.ncols(), |c| {
        let mut acc = Complex::new(0.0, 0.0);
        for r in 0..a.nrows() {
            acc += a[[r, c]].conj() * y[r];
        }
        acc
    })
}

/// Flatten an image row-major into a vector (the pixel ordering used by the
/// dense realization).
pub fn flatten(img: &Array2<C>) -> Array1<C> {
    Array1::from_iter(img.iter().copied())
}

pub fn unflatten(v: &Array1<C>, nx: usize, ny: usize) -> Array2<C> {
    Array2::from_shape_vec((nx, ny), v.to_vec()).unwrap()
}
