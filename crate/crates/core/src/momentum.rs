//! Shared accelerated-iteration engine: the proximal optimized gradient
//! method over a generic state container. The smooth-cost accelerated solver
//! is this engine with an identity proximal map; the composite solver passes
//! a shrinkage prox. Keeping one engine guarantees the two produce identical
//! iterate sequences whenever the proximal map is the identity.

use crate::error::{ReconError, Result};
use crate::num::{Cplx, Scalar};
use crate::trace::SolverTrace;
use crate::vec;
use ndarray::{Array, Dimension};

/// When to discard accumulated momentum and restart the recursion from the
/// current iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Restart {
    /// Never restart (the plain worst-case-optimal schedule).
    #[default]
    Off,
    /// Restart when the objective value increases.
    FunctionValue,
    /// Restart when the composite-gradient direction forms an acute angle
    /// with the last step (momentum has overshot).
    GradientAngle,
}

/// Relative objective-change early-stop test shared by the iterative
/// solvers: fires when `|c_prev − c| ≤ tol · max(1, |c_prev|)`.
pub(crate) fn cost_stalled<T: Scalar>(prev: T, current: T, tol: Option<T>) -> bool {
    match tol {
        None => false,
        Some(t) => (prev - current).abs() <= t * T::one().max(prev.abs()),
    }
}

/// Runs the momentum recursion for `iters` steps from `x0` with smooth-part
/// Lipschitz constant `big_l`.
///
/// The momentum scalar θ follows the two-branch schedule (one rule for
/// interior steps, a stronger final-step rule that requires the iteration
/// count upfront), the step scalar γ_k = (2θ_{k−1} + θ_k − 1)/(L θ_k), and
/// each iterate is `prox(z_k, γ_k)` where `z_k` combines the gradient point
/// `w_k` with three momentum corrections. θ_0 = 1 forces the coefficient of
/// the γ_0 term to zero at k = 1, so γ's seed value is never consumed.
///
/// `cost` is evaluated once per iteration for the trace (and drives the
/// function-value restart); `err` supplies the optional reference-error
/// metric. If `rel_cost_tol` is set and the objective stalls, the run stops
/// early, skipping the final-step θ rule (noted in the trace).
pub(crate) fn run_pogm<T, D>(
    x0: &Array<Cplx<T>, D>,
    big_l: T,
    iters: usize,
    restart: Restart,
    rel_cost_tol: Option<T>,
    mut grad_f: impl FnMut(&Array<Cplx<T>, D>) -> Result<Array<Cplx<T>, D>>,
    mut prox: impl FnMut(&Array<Cplx<T>, D>, T) -> Array<Cplx<T>, D>,
    mut cost: impl FnMut(&Array<Cplx<T>, D>) -> Result<T>,
    mut err: impl FnMut(&Array<Cplx<T>, D>) -> Option<T>,
) -> Result<(Array<Cplx<T>, D>, SolverTrace<T>)>
where
    T: Scalar,
    D: Dimension,
{
    if !(big_l > T::zero()) || !big_l.is_finite() {
        return Err(ReconError::Config(format!("step bound must be positive and finite, got {big_l}")));
    }
    let inv_l = T::one() / big_l;
    let mut trace = SolverTrace::new();

    let mut x_prev = x0.clone();
    let mut w_prev = x0.clone();
    let mut z_prev = x0.clone();
    let mut theta_prev = T::one();
    let mut gamma_prev = inv_l; // multiplied by θ_prev − 1 = 0 until θ grows
    let mut cost_prev = cost(&x_prev)?;
    trace.record(0, cost_prev, err(&x_prev));

    for k in 1..=iters {
        let branch = if k == iters { T::of(8.0) } else { T::of(4.0) };
        let theta =
            (T::one() + (branch * theta_prev * theta_prev + T::one()).sqrt()) * T::of(0.5);

        let g = grad_f(&x_prev)?;
        let mut w = x_prev.clone();
        vec::axpy(-inv_l, &g, &mut w);

        let a_w = (theta_prev - T::one()) / theta;
        let a_x = theta_prev / theta;
        let a_z = if theta_prev > T::one() {
            (theta_prev - T::one()) / (big_l * gamma_prev * theta)
        } else {
            T::zero()
        };
        let mut z = w.clone();
        ndarray::Zip::from(&mut z)
            .and(&w)
            .and(&w_prev)
            .and(&x_prev)
            .and(&z_prev)
            .for_each(|z, &w, &wp, &xp, &zp| {
                *z += (w - wp) * a_w + (w - xp) * a_x + (zp - xp) * a_z;
            });

        let gamma = inv_l * (T::of(2.0) * theta_prev + theta - T::one()) / theta;
        let x = prox(&z, gamma);
        if !vec::all_finite(&x) {
            return Err(ReconError::Solver(format!("non-finite iterate at step {k}")));
        }
        let cost_k = cost(&x)?;
        trace.record(k, cost_k, err(&x));

        let fire = match restart {
            Restart::Off => false,
            Restart::FunctionValue => cost_k > cost_prev,
            Restart::GradientAngle => {
                // composite-gradient surrogate: L(x_{k−1} − w_k) + (z_k − x_k)/γ_k
                let mut acc = T::zero();
                ndarray::Zip::from(&x).and(&x_prev).and(&w).and(&z).for_each(|&xk, &xp, &wk, &zk| {
                    let u = (xp - wk) * big_l + (zk - xk) / gamma;
                    let step = xk - xp;
                    acc += u.re * step.re + u.im * step.im;
                });
                acc > T::zero()
            }
        };

        let stalled = cost_stalled(cost_prev, cost_k, rel_cost_tol);
        if fire && k < iters {
            trace.note(format!("momentum restart at iteration {k}"));
            theta_prev = T::one();
            gamma_prev = inv_l;
            w_prev = x.clone();
            z_prev = x.clone();
            x_prev = x;
        } else {
            theta_prev = theta;
            gamma_prev = gamma;
            w_prev = w;
            z_prev = z;
            x_prev = x;
        }
        cost_prev = cost_k;

        if stalled && k < iters {
            trace.note(format!(
                "objective stalled at iteration {k}; stopping before the final-step momentum rule"
            ));
            break;
        }
    }
    Ok((x_prev, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    /// Scalar quadratic f(x) = ½ a x² with a = L; gradient a·x.
    fn scalar_problem(a: f64) -> (impl Fn(&Array1<Cplx<f64>>) -> Result<Array1<Cplx<f64>>>, impl Fn(&Array1<Cplx<f64>>) -> Result<f64>) {
        let grad = move |x: &Array1<Cplx<f64>>| Ok(x.mapv(|v| v * Cplx::new(a, 0.0)));
        let cost = move |x: &Array1<Cplx<f64>>| Ok(0.5 * a * vec::norm_sq(x));
        (grad, cost)
    }

    #[test]
    fn theta_sequence_follows_the_two_branch_rule() {
        // run 3 iterations on a trivial problem and recover θ from the
        // recursion by replaying it
        let golden = 0.5 * (1.0 + 5.0f64.sqrt());
        let theta2 = 0.5 * (1.0 + (4.0 * golden * golden + 1.0).sqrt());
        let theta3_final = 0.5 * (1.0 + (8.0 * theta2 * theta2 + 1.0).sqrt());
        assert!((golden - 1.618_033_988_749_894_8).abs() < 1e-12);
        assert!(theta2 > golden && theta3_final > theta2);
        // engine runs without error and matches the hand recursion below
        let (grad, cost) = scalar_problem(1.0);
        let x0 = Array1::from_vec(vec![Cplx::new(1.0, 0.0)]);
        let (x, tr) = run_pogm(
            &x0,
            1.0,
            3,
            Restart::Off,
            None,
            grad,
            |z, _| z.clone(),
            cost,
            |_| None,
        )
        .unwrap();
        assert_eq!(tr.records().len(), 4);
        // hand recursion: L = a = 1, g_k = x_k, identity prox
        let mut xp = 1.0f64;
        let mut wp = 1.0f64;
        let mut zp = 1.0f64;
        let mut thp = 1.0f64;
        let mut gp = 1.0f64;
        for k in 1..=3 {
            let branch = if k == 3 { 8.0 } else { 4.0 };
            let th = 0.5 * (1.0 + (branch * thp * thp + 1.0).sqrt());
            let w = xp - xp; // x − (1/L)·g with g = x, L = 1
            let az = if thp > 1.0 { (thp - 1.0) / (gp * th) } else { 0.0 };
            let z = w + (thp - 1.0) / th * (w - wp) + thp / th * (w - xp) + az * (zp - xp);
            let gam = (2.0 * thp + th - 1.0) / th;
            xp = z;
            wp = w;
            zp = z;
            thp = th;
            gp = gam;
        }
        assert!((x[0].re - xp).abs() < 1e-14, "engine {} vs hand {}", x[0].re, xp);
    }

    #[test]
    fn stationary_start_stays_fixed() {
        let (grad, cost) = scalar_problem(2.0);
        let x0 = Array1::from_vec(vec![Cplx::new(0.0, 0.0)]);
        let (x, tr) = run_pogm(&x0, 2.0, 5, Restart::Off, None, grad, |z, _| z.clone(), cost, |_| None).unwrap();
        assert_eq!(x[0], Cplx::new(0.0, 0.0));
        assert!(tr.records().iter().all(|r| r.cost == 0.0));
    }

    #[test]
    fn first_step_is_the_momentum_scaled_gradient_step() {
        // with θ_1 = (1+√5)/2 the first iterate is x0 − (1/L)(1 + 1/θ_1)·g0
        let a = 3.0;
        let (grad, cost) = scalar_problem(a);
        let x0 = Array1::from_vec(vec![Cplx::new(2.0, -1.0)]);
        let (x, _) = run_pogm(&x0, a, 2, Restart::Off, None, grad, |z, _| z.clone(), cost, |_| None).unwrap();
        let golden = 0.5 * (1.0 + 5.0f64.sqrt());
        let _ = x; // iterate after 2 steps; check step 1 via a 2-step replay is covered above
        let (x1_run, _) = run_pogm(
            &x0,
            a,
            2,
            Restart::Off,
            Some(1e30), // stall immediately after the first step
            |v| Ok(v.mapv(|c| c * Cplx::new(a, 0.0))),
            |z, _| z.clone(),
            |v| Ok(0.5 * a * vec::norm_sq(v)),
            |_| None,
        )
        .unwrap();
        let want = x0[0] - x0[0] * Cplx::new(1.0 + 1.0 / golden, 0.0); // (1/L)·g0 = x0
        assert!((x1_run[0] - want).norm() < 1e-14);
    }

    #[test]
    fn diverging_step_bound_is_rejected() {
        let (grad, cost) = scalar_problem(1.0);
        let x0 = Array1::from_vec(vec![Cplx::new(1.0, 0.0)]);
        assert!(run_pogm(&x0, 0.0, 2, Restart::Off, None, grad, |z, _| z.clone(), cost, |_| None).is_err());
    }
}
