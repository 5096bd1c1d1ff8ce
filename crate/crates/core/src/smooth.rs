//! Solvers for smooth penalized least-squares reconstruction costs
//! `½‖Ax − y‖² + λ·Σ_k w_k ψ((Tx)_k)` with a differentiable potential ψ:
//! (preconditioned) conjugate gradient for the quadratic case, fixed-step
//! gradient descent, nonlinear conjugate gradient, and the accelerated
//! first-order method built on the shared momentum engine.

use crate::error::{ReconError, Result};
use crate::fft::Fft2;
use crate::model::SystemOperator;
use crate::momentum::{cost_stalled, run_pogm, Restart};
use crate::num::{Cplx, Scalar};
use crate::potential::Potential;
use crate::trace::SolverTrace;
use crate::transform::Transform;
use crate::types::{Image, KSpaceData};
use crate::vec;
use ndarray::Array2;

/// A differentiable reconstruction cost tying together the system operator,
/// measured data, a sparsifying transform, and a smooth potential. Optional
/// transform weights scale the penalty per coefficient.
#[derive(Debug)]
pub struct SmoothCost<'a, T: Scalar> {
    op: &'a SystemOperator<T>,
    y: &'a KSpaceData<T>,
    lambda: T,
    transform: &'a Transform<T>,
    potential: Potential<T>,
    adjoint_y: Array2<Cplx<T>>,
}

impl<'a, T: Scalar> SmoothCost<'a, T> {
    pub fn new(
        op: &'a SystemOperator<T>,
        y: &'a KSpaceData<T>,
        lambda: T,
        transform: &'a Transform<T>,
        potential: Potential<T>,
    ) -> Result<Self> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(ReconError::Config(format!("penalty weight must be ≥ 0, got {lambda}")));
        }
        if !potential.is_smooth() {
            return Err(ReconError::Config(
                "this cost needs a differentiable potential; use a proximal or splitting solver for the one-norm".into(),
            ));
        }
        if y.mask() != op.mask() {
            return Err(ReconError::Config(
                "k-space data was sampled with a different mask than this operator".into(),
            ));
        }
        let k = transform.output_len(op.nx(), op.ny())?;
        if let Some(w) = transform.weights() {
            if w.len() != k {
                return Err(ReconError::Dimension(format!(
                    "{} weights attached to a transform with {k} coefficients",
                    w.len()
                )));
            }
        }
        let adjoint_y = op.adjoint_arr(y.samples());
        Ok(Self { op, y, lambda, transform, potential, adjoint_y })
    }

    pub fn op(&self) -> &SystemOperator<T> {
        self.op
    }

    pub fn transform(&self) -> &Transform<T> {
        self.transform
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn potential(&self) -> Potential<T> {
        self.potential
    }

    pub(crate) fn adjoint_y(&self) -> &Array2<Cplx<T>> {
        &self.adjoint_y
    }

    /// `½‖Ax − y‖² + λ·Σ_k w_k ψ((Tx)_k)`.
    pub fn cost(&self, x: &Array2<Cplx<T>>) -> Result<T> {
        let data = self.op.data_cost_arr(x, self.y.samples());
        if self.lambda == T::zero() {
            return Ok(data);
        }
        let c = self.transform.apply(x)?;
        let reg = match self.transform.weights() {
            None => c.iter().map(|&v| self.potential.value(v)).sum(),
            Some(w) => c.iter().zip(w.iter()).map(|(&v, &w)| w * self.potential.value(v)).sum(),
        };
        Ok(data + self.lambda * reg)
    }

    /// `A'(Ax − y) + λ·T'(w ∘ ψ̇(Tx))`.
    pub fn grad(&self, x: &Array2<Cplx<T>>) -> Result<Array2<Cplx<T>>> {
        let mut g = self.op.data_grad_arr(x, &self.adjoint_y);
        if self.lambda > T::zero() {
            let mut c = self.transform.apply(x)?;
            match self.transform.weights() {
                None => c.mapv_inplace(|v| self.potential.grad_raw(v)),
                Some(w) => {
                    for (v, &w) in c.iter_mut().zip(w.iter()) {
                        *v = self.potential.grad_raw(*v) * w;
                    }
                }
            }
            let back = self.transform.apply_adjoint(c.view(), self.op.nx(), self.op.ny())?;
            vec::axpy(self.lambda, &back, &mut g);
        }
        Ok(g)
    }

    /// Conservative gradient-Lipschitz bound:
    /// `‖A‖² + λ·(max w)·(sup ψ̈)·‖T‖²`.
    pub fn lipschitz(&self) -> T {
        let curv = self.potential.curvature_bound().expect("smooth potentials have bounded curvature");
        let wmax = self
            .transform
            .weights()
            .map(|w| w.iter().copied().fold(T::zero(), T::max))
            .unwrap_or_else(T::one);
        self.op.lipschitz() + self.lambda * curv * wmax * self.transform.op_norm_sq_bound()
    }

    /// Exact curvature `⟨d, H d⟩` of the quadratic-potential cost along `d`
    /// (an upper bound on the directional curvature for the other
    /// potentials, whose ψ̈ ≤ curvature_bound).
    fn direction_curvature(&self, d: &Array2<Cplx<T>>) -> Result<T> {
        let ad = self.op.forward_arr(d);
        let mut q = vec::norm_sq(&ad);
        if self.lambda > T::zero() {
            let curv = self.potential.curvature_bound().expect("smooth potentials have bounded curvature");
            let td = self.transform.apply(d)?;
            let reg = match self.transform.weights() {
                None => vec::norm_sq(&td),
                Some(w) => td.iter().zip(w.iter()).map(|(v, &w)| w * v.norm_sqr()).sum(),
            };
            q += self.lambda * curv * reg;
        }
        Ok(q)
    }

    /// `(A'A + λ T'diag(w) T)·x` for the quadratic potential.
    pub(crate) fn quad_hessian(&self, x: &Array2<Cplx<T>>) -> Result<Array2<Cplx<T>>> {
        let mut h = self.op.gram_arr(x);
        if self.lambda > T::zero() {
            let mut c = self.transform.apply(x)?;
            if let Some(w) = self.transform.weights() {
                for (v, &w) in c.iter_mut().zip(w.iter()) {
                    *v = *v * w;
                }
            }
            let back = self.transform.apply_adjoint(c.view(), self.op.nx(), self.op.ny())?;
            vec::axpy(self.lambda, &back, &mut h);
        }
        Ok(h)
    }

    fn check_start(&self, x0: &Image<T>) -> Result<()> {
        if x0.nx() != self.op.nx() || x0.ny() != self.op.ny() {
            return Err(ReconError::Dimension(format!(
                "start image {}x{} does not match operator grid {}x{}",
                x0.nx(),
                x0.ny(),
                self.op.nx(),
                self.op.ny()
            )));
        }
        Ok(())
    }
}

/// Preconditioning choice for the quadratic-cost conjugate-gradient solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precond {
    #[default]
    None,
    /// Invert the circulant model of the Hessian built from its action on a
    /// centered impulse.
    Circulant,
}

/// Shared optional knobs for the iterative solvers.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOpts<'r, T: Scalar> {
    /// Early-stop tolerance. Conjugate gradient reads it as a relative
    /// residual bound (default 1e-14); the gradient-based solvers read it as
    /// a relative cost-change bound (default: run the full budget).
    pub rel_tol: Option<T>,
    /// When set, each trace record carries the relative error against this
    /// image.
    pub reference: Option<&'r Image<T>>,
}

fn err_closure<'r, T: Scalar>(
    opts: &SolveOpts<'r, T>,
) -> impl Fn(&Array2<Cplx<T>>) -> Option<T> + 'r {
    let reference = opts.reference;
    move |x| reference.map(|r| vec::nrmse(x, r.data()))
}

/// Circulant surrogate of a Hermitian operator on the image grid, built from
/// the operator's response to an impulse at the grid center and inverted in
/// k-space with a relative floor of 1e-8 to keep the inversion bounded.
pub(crate) struct CirculantInverse<T: Scalar> {
    fft: Fft2<T>,
    inv_spectrum: Array2<T>,
}

impl<T: Scalar> CirculantInverse<T> {
    pub(crate) fn build(apply: impl Fn(&Array2<Cplx<T>>) -> Result<Array2<Cplx<T>>>, nx: usize, ny: usize) -> Result<Self> {
        let (cx, cy) = (nx / 2, ny / 2);
        let mut impulse = Array2::zeros((nx, ny));
        impulse[[cx, cy]] = Cplx::new(T::one(), T::zero());
        let resp = apply(&impulse)?;
        // shift the response so the impulse location lands at the origin,
        // yielding the first column of the circulant model
        let mut kernel = Array2::zeros((nx, ny));
        for i in 0..nx {
            for j in 0..ny {
                kernel[[i, j]] = resp[[(i + cx) % nx, (j + cy) % ny]];
            }
        }
        let fft = Fft2::new(nx, ny);
        fft.forward(&mut kernel);
        let smax = kernel.iter().fold(T::zero(), |m, v| m.max(v.re.abs()));
        if smax <= T::zero() {
            return Err(ReconError::Solver("cannot precondition a zero operator".into()));
        }
        let floor = T::of(1e-8) * smax;
        let inv_spectrum = kernel.mapv(|v| T::one() / v.re.max(floor));
        Ok(Self { fft, inv_spectrum })
    }

    pub(crate) fn apply(&self, r: &Array2<Cplx<T>>) -> Array2<Cplx<T>> {
        let mut g = r.clone();
        self.fft.forward(&mut g);
        ndarray::Zip::from(&mut g).and(&self.inv_spectrum).for_each(|g, &s| *g = *g * s);
        self.fft.backward(&mut g);
        let inv_n = T::one() / T::of(self.fft.n() as f64);
        g.mapv_inplace(|v| v * inv_n);
        g
    }
}

/// Conjugate gradient on the Hermitian system `H x = b`, optionally
/// preconditioned; runs until the iteration budget or until the relative
/// residual falls to `rel_tol`. `on_iterate` observes every accepted iterate
/// including the start.
pub(crate) fn cg_core<T: Scalar>(
    h: impl Fn(&Array2<Cplx<T>>) -> Result<Array2<Cplx<T>>>,
    minv: Option<&CirculantInverse<T>>,
    b: &Array2<Cplx<T>>,
    x0: &Array2<Cplx<T>>,
    iters: usize,
    rel_tol: T,
    mut on_iterate: impl FnMut(usize, &Array2<Cplx<T>>) -> Result<()>,
) -> Result<Array2<Cplx<T>>> {
    let mut x = x0.clone();
    let mut r = vec::sub(b, &h(&x)?);
    let bnorm = vec::norm(b).max(T::min_positive_value());
    let precondition = |r: &Array2<Cplx<T>>| match minv {
        None => r.clone(),
        Some(m) => m.apply(r),
    };
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = vec::rdot(&r, &z);
    on_iterate(0, &x)?;
    for k in 1..=iters {
        if vec::norm(&r) <= rel_tol * bnorm {
            break;
        }
        let hp = h(&p)?;
        let php = vec::rdot(&p, &hp);
        if !(php > T::zero()) {
            // reached the operator's null space (λ = 0 with an incomplete
            // mask); no further progress possible along conjugate directions
            break;
        }
        let alpha = rz / php;
        vec::axpy(alpha, &p, &mut x);
        vec::axpy(-alpha, &hp, &mut r);
        if !vec::all_finite(&x) {
            return Err(ReconError::Solver(format!("non-finite iterate at step {k}")));
        }
        z = precondition(&r);
        let rz_next = vec::rdot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        ndarray::Zip::from(&mut p).and(&z).for_each(|p, &z| *p = z + *p * beta);
        on_iterate(k, &x)?;
    }
    Ok(x)
}

/// Conjugate gradient for the quadratic-potential cost, solving
/// `(A'A + λT'T)x = A'y`. With `Precond::Circulant` the Hessian's circulant
/// model (from its centered impulse response) preconditions the iteration.
pub fn cg_quadratic<T: Scalar>(
    cost: &SmoothCost<'_, T>,
    x0: &Image<T>,
    iters: usize,
    precond: Precond,
    opts: &SolveOpts<'_, T>,
) -> Result<(Image<T>, SolverTrace<T>)> {
    if !matches!(cost.potential(), Potential::Quadratic) {
        return Err(ReconError::Config(
            "conjugate gradient handles the quadratic potential; use ncg for other smooth potentials".into(),
        ));
    }
    cost.check_start(x0)?;
    let h = |v: &Array2<Cplx<T>>| cost.quad_hessian(v);
    let minv = match precond {
        Precond::None => None,
        Precond::Circulant => Some(CirculantInverse::build(h, cost.op.nx(), cost.op.ny())?),
    };
    let rel_tol = opts.rel_tol.unwrap_or_else(|| T::of(1e-14));
    let err = err_closure(opts);
    let mut trace = SolverTrace::new();
    let x = cg_core(h, minv.as_ref(), cost.adjoint_y(), x0.data(), iters, rel_tol, |k, x| {
        let c = cost.cost(x)?;
        if !c.is_finite() {
            return Err(ReconError::Solver(format!("non-finite cost at step {k}")));
        }
        trace.record(k, c, err(x));
        Ok(())
    })?;
    Ok((Image::new(x)?, trace))
}

/// Fixed-step gradient descent `x ← x − (1/L)∇Ψ(x)`. `l` defaults to the
/// cost's conservative Lipschitz bound; the cost sequence is checked to be
/// nonincreasing (up to 1e-12 relative slack) and any violation aborts,
/// since it proves the supplied `l` was not a valid bound.
pub fn gradient_descent<T: Scalar>(
    cost: &SmoothCost<'_, T>,
    x0: &Image<T>,
    iters: usize,
    l: Option<T>,
    opts: &SolveOpts<'_, T>,
) -> Result<(Image<T>, SolverTrace<T>)> {
    cost.check_start(x0)?;
    let l = l.unwrap_or_else(|| cost.lipschitz());
    if !(l > T::zero()) || !l.is_finite() {
        return Err(ReconError::Config(format!("step bound must be positive and finite, got {l}")));
    }
    let inv_l = T::one() / l;
    let err = err_closure(opts);
    let mut trace = SolverTrace::new();
    let mut x = x0.data().clone();
    let mut prev = cost.cost(&x)?;
    trace.record(0, prev, err(&x));
    for k in 1..=iters {
        let g = cost.grad(&x)?;
        vec::axpy(-inv_l, &g, &mut x);
        if !vec::all_finite(&x) {
            return Err(ReconError::Solver(format!("non-finite iterate at step {k}")));
        }
        let c = cost.cost(&x)?;
        trace.record(k, c, err(&x));
        if c > prev + T::of(1e-12) * T::one().max(prev.abs()) {
            return Err(ReconError::Invariant(format!(
                "cost increased from {prev} to {c} at step {k}; the step bound {l} is not a valid Lipschitz constant"
            )));
        }
        let stalled = cost_stalled(prev, c, opts.rel_tol);
        prev = c;
        if stalled {
            break;
        }
    }
    Ok((Image::new(x)?, trace))
}

/// Nonlinear conjugate gradient with the non-negative Polak–Ribière
/// direction update and an Armijo line search (c = 1e-4, halving) seeded by
/// the one-dimensional quadratic-model minimizer, which is exact for the
/// quadratic potential and a guaranteed-decrease majorizer step otherwise.
/// The direction resets to steepest descent whenever it stops being a
/// descent direction; a failed line search falls back to a gradient step
/// (both events are noted in the trace).
pub fn ncg<T: Scalar>(
    cost: &SmoothCost<'_, T>,
    x0: &Image<T>,
    iters: usize,
    opts: &SolveOpts<'_, T>,
) -> Result<(Image<T>, SolverTrace<T>)> {
    cost.check_start(x0)?;
    let err = err_closure(opts);
    let mut trace = SolverTrace::new();
    let mut x = x0.data().clone();
    let mut g = cost.grad(&x)?;
    let mut d = g.mapv(|v| -v);
    let mut prev = cost.cost(&x)?;
    let armijo = T::of(1e-4);
    let fallback_l = cost.lipschitz();
    trace.record(0, prev, err(&x));
    for k in 1..=iters {
        let gg = vec::norm_sq(&g);
        if gg == T::zero() {
            break; // stationary point
        }
        let mut slope = vec::rdot(&g, &d);
        if slope >= T::zero() {
            trace.note(format!("direction reset to steepest descent at iteration {k}"));
            d = g.mapv(|v| -v);
            slope = -gg;
        }
        let q = cost.direction_curvature(&d)?;
        let mut alpha = if q > T::zero() { -slope / q } else { T::one() / fallback_l };
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = x.clone();
            vec::axpy(alpha, &d, &mut trial);
            let c = cost.cost(&trial)?;
            if c <= prev + armijo * alpha * slope {
                accepted = Some((trial, c));
                break;
            }
            alpha = alpha * T::of(0.5);
        }
        let c = match accepted {
            Some((trial, c)) => {
                x = trial;
                c
            }
            None => {
                trace.note(format!("line search failed at iteration {k}; taking a gradient step"));
                vec::axpy(-T::one() / fallback_l, &g, &mut x);
                cost.cost(&x)?
            }
        };
        if !vec::all_finite(&x) || !c.is_finite() {
            return Err(ReconError::Solver(format!("non-finite iterate at step {k}")));
        }
        trace.record(k, c, err(&x));
        let g_next = cost.grad(&x)?;
        let mut num = T::zero();
        ndarray::Zip::from(&g_next).and(&g).for_each(|&gn, &go| {
            let diff = gn - go;
            num += gn.re * diff.re + gn.im * diff.im;
        });
        let beta = (num / gg).max(T::zero());
        ndarray::Zip::from(&mut d).and(&g_next).for_each(|d, &gn| *d = *d * beta - gn);
        g = g_next;
        let stalled = cost_stalled(prev, c, opts.rel_tol);
        prev = c;
        if stalled {
            break;
        }
    }
    Ok((Image::new(x)?, trace))
}

/// Accelerated first-order method for the smooth cost: the momentum engine
/// with an identity proximal map, so the iterate sequence is the proximal
/// variant's with a vanishing nonsmooth part. `l` defaults to the cost's
/// conservative Lipschitz bound.
pub fn ogm<T: Scalar>(
    cost: &SmoothCost<'_, T>,
    x0: &Image<T>,
    iters: usize,
    l: Option<T>,
    restart: Restart,
    opts: &SolveOpts<'_, T>,
) -> Result<(Image<T>, SolverTrace<T>)> {
    cost.check_start(x0)?;
    let l = l.unwrap_or_else(|| cost.lipschitz());
    let err = err_closure(opts);
    let (x, trace) = run_pogm(
        x0.data(),
        l,
        iters,
        restart,
        opts.rel_tol,
        |v| cost.grad(v),
        |z, _| z.clone(),
        |v| cost.cost(v),
        |v| err(v),
    )?;
    Ok((Image::new(x)?, trace))
}
