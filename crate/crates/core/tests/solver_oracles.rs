//! Iterative solvers checked against dense linear algebra built entry by
//! entry from the model definition: CG against a direct solve, gradient
//! descent against its explicit error-propagation matrix, the power-method
//! spectral estimate against dense singular values, and the conjugate
//! direction method against plain descent on an edge-preserving objective.

mod common;

use common::*;
use ndarray::{Array1, Array2};
use num_complex::Complex;
use recon_core::{
    cg_quadratic, gradient_descent, ncg, Image, Potential, Precond, Restart, SmoothCost, SolveOpts,
    SystemOperator, Transform,
};

/// Dense realization of the periodic finite-difference analysis matrix
/// (vertical differences stacked over horizontal), written directly from
/// the stencil.
fn dense_diff(nx: usize, ny: usize) -> Array2<C> {
    let n = nx * ny;
    let mut d = Array2::from_elem((2 * n, n), Complex::new(0.0, 0.0));
    for i in 0..nx {
        for j in 0..ny {
            let row = i * ny + j;
            d[[row, ((i + 1) % nx) * ny + j]] += Complex::new(1.0, 0.0);
            d[[row, i * ny + j]] -= Complex::new(1.0, 0.0);
            d[[n + row, i * ny + (j + 1) % ny]] += Complex::new(1.0, 0.0);
            d[[n + row, i * ny + j]] -= Complex::new(1.0, 0.0);
        }
    }
    d
}

/// Dense normal-equations matrix `A'A + λ D'D` and right-hand side `A'y`.
fn dense_normal_eq(
    a: &Array2<C>,
    d: &Array2<C>,
    lambda: f64,
    y: &Array1<C>,
) -> (nalgebra::DMatrix<C>, Array1<C>) {
    let n = a.ncols();
    let mut h = nalgebra::DMatrix::<C>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex::new(0.0, 0.0);
            for k in 0..a.nrows() {
                acc += a[[k, r]].conj() * a[[k, c]];
            }
            for k in 0..d.nrows() {
                acc += d[[k, r]].conj() * d[[k, c]] * lambda;
            }
            h[(r, c)] = acc;
        }
    }
    (h, adjvec(a, y))
}

#[test]
fn cg_matches_the_dense_direct_solve() {
    let mut rng = rng(41);
    let mask = rand_mask(&mut rng, 8, 8, 0.5);
    let smaps = rand_maps(&mut rng, 2, 8, 8, true);
    let op = SystemOperator::new(mask.clone(), smaps.clone()).unwrap();
    let x_true = rand_image(&mut rng, 8, 8);
    let y = op.forward(&Image::new(x_true).unwrap()).unwrap();
    let lambda = 0.3;
    let t = Transform::finite_diff_2d();
    let cost = SmoothCost::new(&op, &y, lambda, &t, Potential::Quadratic).unwrap();

    let a = dense_full(&mask, &smaps);
    let d = dense_diff(8, 8);
    let mut y_flat = Array1::from_elem(a.nrows(), Complex::new(0.0, 0.0));
    let m = mask.count();
    for l in 0..2 {
        for i in 0..m {
            y_flat[l * m + i] = y.samples()[[i, l]];
        }
    }
    let (h, b) = dense_normal_eq(&a, &d, lambda, &y_flat);
    let b_na = nalgebra::DVector::<C>::from_iterator(b.len(), b.iter().copied());
    let solved = h.lu().solve(&b_na).expect("dense normal equations are nonsingular");
    let star = unflatten(&Array1::from_iter(solved.iter().copied()), 8, 8);

    let x0 = Image::zeros(8, 8).unwrap();
    let (x, _) = cg_quadratic(&cost, &x0, 200, Precond::None, &SolveOpts::default()).unwrap();
    let err = recon_core::vec::nrmse(x.data(), &star);
    assert!(err < 1e-8, "CG disagrees with the direct solve by {err}");
}

#[test]
fn gradient_descent_follows_its_error_propagation_matrix() {
    let mut rng = rng(42);
    let mask = rand_mask(&mut rng, 4, 4, 0.6);
    let smaps = rand_maps(&mut rng, 2, 4, 4, true);
    let op = SystemOperator::new(mask.clone(), smaps.clone()).unwrap();
    let y = op.forward(&Image::new(rand_image(&mut rng, 4, 4)).unwrap()).unwrap();
    let lambda = 0.5;
    let t = Transform::finite_diff_2d();
    let cost = SmoothCost::new(&op, &y, lambda, &t, Potential::Quadratic).unwrap();
    let big_l = cost.lipschitz();

    let a = dense_full(&mask, &smaps);
    let d = dense_diff(4, 4);
    let m = mask.count();
    let mut y_flat = Array1::from_elem(a.nrows(), Complex::new(0.0, 0.0));
    for l in 0..2 {
        for i in 0..m {
            y_flat[l * m + i] = y.samples()[[i, l]];
        }
    }
    let (h, b) = dense_normal_eq(&a, &d, lambda, &y_flat);
    let b_na = nalgebra::DVector::<C>::from_iterator(b.len(), b.iter().copied());
    let star = h.clone().lu().solve(&b_na).unwrap();

    // e_k = (I − H/L)^k e_0, checked at k = 7 from a random start
    let x0_img = rand_image(&mut rng, 4, 4);
    let k = 7;
    let n = 16;
    let prop = nalgebra::DMatrix::<C>::identity(n, n) - &h / Complex::new(big_l, 0.0);
    let mut e = nalgebra::DVector::<C>::from_iterator(
        n,
        flatten(&x0_img).iter().zip(star.iter()).map(|(x, s)| x - s),
    );
    for _ in 0..k {
        e = &prop * e;
    }
    let want = Array1::from_iter((0..n).map(|i| star[i] + e[i]));

    let (x, _) =
        gradient_descent(&cost, &Image::new(x0_img).unwrap(), k, None, &SolveOpts::default()).unwrap();
    let got = flatten(x.data());
    let err = recon_core::vec::nrmse(&got, &want);
    assert!(err < 1e-10, "descent strayed from its propagation matrix by {err}");
}

#[test]
fn power_method_reaches_the_dense_top_singular_value() {
    let mut rng = rng(43);
    for seed_extra in 0..3 {
        let mask = rand_mask(&mut rng, 8, 8, 0.4 + 0.1 * seed_extra as f64);
        let smaps = rand_maps(&mut rng, 2, 8, 8, false);
        let op = SystemOperator::new(mask.clone(), smaps.clone()).unwrap();
        let a = dense_full(&mask, &smaps);
        let na = nalgebra::DMatrix::<C>::from_fn(a.nrows(), a.ncols(), |r, c| a[[r, c]]);
        let top_sq = na.singular_values()[0].powi(2);
        let est = recon_core::linalg::power_iteration(
            |v: &Array1<C>| flatten(&op.gram(&Image::new(unflatten(v, 8, 8)).unwrap()).unwrap().into_data()),
            64,
            300,
            1e-9,
        );
        assert!(
            est >= 0.99 * top_sq && est <= 1.0000001 * top_sq,
            "estimate {est} vs dense {top_sq}"
        );
    }
}

#[test]
fn conjugate_directions_beat_plain_descent_on_edge_preserving_costs() {
    let mut rng = rng(44);
    for trial in 0..3 {
        let mask = rand_mask(&mut rng, 8, 8, 0.5);
        let smaps = rand_maps(&mut rng, 1 + trial % 2, 8, 8, true);
        let op = SystemOperator::new(mask, smaps).unwrap();
        let y = op.forward(&Image::new(rand_image(&mut rng, 8, 8)).unwrap()).unwrap();
        let t = Transform::finite_diff_2d();
        let cost = SmoothCost::new(&op, &y, 0.2, &t, Potential::Fair { delta: 0.1 }).unwrap();
        let x0 = Image::zeros(8, 8).unwrap();
        let iters = 25;
        let (_, tr_cg) = ncg(&cost, &x0, iters, &SolveOpts::default()).unwrap();
        let (_, tr_gd) = gradient_descent(&cost, &x0, iters, None, &SolveOpts::default()).unwrap();
        let c_cg = tr_cg.last_cost().unwrap();
        let c_gd = tr_gd.last_cost().unwrap();
        assert!(
            c_cg <= c_gd + 1e-12 * c_gd.abs(),
            "trial {trial}: conjugate directions behind descent: {c_cg} vs {c_gd}"
        );
    }
}

#[test]
fn accelerated_descent_beats_plain_descent_at_equal_budget() {
    let mut rng = rng(45);
    let mask = rand_mask(&mut rng, 8, 8, 0.45);
    let smaps = rand_maps(&mut rng, 2, 8, 8, true);
    let op = SystemOperator::new(mask, smaps).unwrap();
    let y = op.forward(&Image::new(rand_image(&mut rng, 8, 8)).unwrap()).unwrap();
    let t = Transform::finite_diff_2d();
    let cost = SmoothCost::new(&op, &y, 0.15, &t, Potential::Hyperbola { eps: 0.05 }).unwrap();
    let x0 = Image::zeros(8, 8).unwrap();
    let iters = 60;
    let (_, tr_om) = recon_core::ogm(&cost, &x0, iters, None, Restart::Off, &SolveOpts::default()).unwrap();
    let (_, tr_gd) = gradient_descent(&cost, &x0, iters, None, &SolveOpts::default()).unwrap();
    assert!(
        tr_om.last_cost().unwrap() < tr_gd.last_cost().unwrap(),
        "momentum lost to plain descent: {} vs {}",
        tr_om.last_cost().unwrap(),
        tr_gd.last_cost().unwrap()
    );
}
