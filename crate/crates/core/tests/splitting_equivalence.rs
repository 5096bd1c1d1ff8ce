//! The alternating-direction solvers and the primal-dual iteration minimize
//! the same convex objective, so on small instances all three must agree on
//! the optimal cost. The primal-dual method run far past convergence serves
//! as the reference; both splitting variants are then held to it.

mod common;

use common::*;
use recon_core::{
    admm_analysis, admm_structured, condition_penalties, primal_dual, Image, KSpaceData,
    SystemOperator, Transform,
};

struct TvInstance {
    op: SystemOperator<f64>,
    y: KSpaceData<f64>,
    t: Transform<f64>,
    lambda: f64,
    x0: Image<f64>,
}

fn tv_instance(seed: u64, nx: usize, ny: usize, ncoils: usize) -> TvInstance {
    let mut rng = rng(seed);
    let mask = rand_mask(&mut rng, nx, ny, 0.45);
    let smaps = rand_maps(&mut rng, ncoils, nx, ny, true);
    let op = SystemOperator::new(mask, smaps).unwrap();
    let y = op.forward(&Image::new(rand_image(&mut rng, nx, ny)).unwrap()).unwrap();
    let t = Transform::finite_diff_2d();
    let ay = op.adjoint(&y).unwrap();
    let lambda = 0.01 * ay.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let x0 = Image::new(ay.data().mapv(|v| v / num_complex::Complex::new((nx * ny) as f64, 0.0))).unwrap();
    TvInstance { op, y, t, lambda, x0 }
}

fn final_constraint_residual(notes: &[String]) -> f64 {
    let line = notes
        .iter()
        .rev()
        .find(|n| n.contains("constraint residual"))
        .expect("splitting traces note their constraint residuals");
    line.rsplit(' ').next().unwrap().parse().expect("residual notes end with the number")
}

fn check_instance(inst: &TvInstance, reference_iters: usize, sweep_iters: usize) {
    let TvInstance { op, y, t, lambda, x0 } = inst;
    let (_, tr_pd) = primal_dual(op, y, t, *lambda, None, None, x0, reference_iters).unwrap();
    let c_ref = tr_pd.last_cost().unwrap();

    let (_, tr_a) = admm_analysis(op, y, t, *lambda, None, x0, sweep_iters, 3).unwrap();
    let c_a = tr_a.last_cost().unwrap();
    assert!(
        (c_a - c_ref).abs() <= 1e-6 * c_ref.abs(),
        "two-block split cost {c_a} vs reference {c_ref}"
    );
    let r_a = final_constraint_residual(tr_a.notes());
    assert!(r_a < 1e-6, "two-block constraint residual {r_a}");

    let (m1, m2, m3) = condition_penalties(op, t);
    let (_, tr_s) = admm_structured(op, y, t, *lambda, m1, m2, m3, x0, sweep_iters).unwrap();
    let c_s = tr_s.last_cost().unwrap();
    assert!(
        (c_s - c_ref).abs() <= 1e-6 * c_ref.abs(),
        "closed-form split cost {c_s} vs reference {c_ref}"
    );
}

#[test]
fn all_three_solvers_agree_on_the_small_instance() {
    let inst = tv_instance(1001, 8, 8, 1);
    check_instance(&inst, 100_000, 4000);
}

#[test]
fn all_three_solvers_agree_on_the_larger_multicoil_instance() {
    let inst = tv_instance(1002, 16, 16, 2);
    check_instance(&inst, 100_000, 4000);
}
