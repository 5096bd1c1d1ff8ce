//! Variable-splitting and primal-dual solvers for the analysis-regularized
//! problem `½‖Ax − y‖² + λ·Σ_k w_k |(Tx)_k|`: alternating-direction methods
//! on the split `z = Tx` (inner CG image updates) and on a multi-variable
//! split whose subproblems are all exactly solvable in closed form, a
//! condition-number heuristic for the splitting penalties, and a first-order
//! primal-dual iteration that needs no inner solves at all.

use crate::error::{ReconError, Result};
use crate::model::SystemOperator;
use crate::num::{Cplx, Scalar};
use crate::potential::soft_threshold;
use crate::smooth::cg_core;
use crate::trace::SolverTrace;
use crate::transform::{Transform, TransformKind};
use crate::types::{Image, KSpaceData};
use crate::vec;
use ndarray::{Array1, Array2};

/// Target condition number for the penalty heuristic.
const KAPPA: f64 = 20.0;

fn check_problem<T: Scalar>(
    op: &SystemOperator<T>,
    y: &KSpaceData<T>,
    t: &Transform<T>,
    lambda: T,
    x0: &Image<T>,
) -> Result<usize> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(ReconError::Config(format!("penalty weight must be ≥ 0, got {lambda}")));
    }
    if y.mask() != op.mask() {
        return Err(ReconError::Config(
            "k-space data was sampled with a different mask than this operator".into(),
        ));
    }
    if x0.nx() != op.nx() || x0.ny() != op.ny() {
        return Err(ReconError::Dimension(format!(
            "start image {}x{} does not match operator grid {}x{}",
            x0.nx(),
            x0.ny(),
            op.nx(),
            op.ny()
        )));
    }
    let k = t.output_len(op.nx(), op.ny())?;
    if let Some(w) = t.weights() {
        if w.len() != k {
            return Err(ReconError::Dimension(format!(
                "{} weights attached to a transform with {k} coefficients",
                w.len()
            )));
        }
    }
    Ok(k)
}

fn composite_cost<T: Scalar>(
    op: &SystemOperator<T>,
    y: &KSpaceData<T>,
    t: &Transform<T>,
    lambda: T,
    x: &Array2<Cplx<T>>,
) -> Result<T> {
    let c = t.apply(x)?;
    Ok(op.data_cost_arr(x, y.samples()) + lambda * t.weighted_l1(&c))
}

/// Per-coordinate shrinkage threshold `λ·w_j / μ`.
fn threshold_of<T: Scalar>(t: &Transform<T>, lambda: T, mu: T, j: usize) -> T {
    match t.weights() {
        None => lambda / mu,
        Some(w) => lambda * w[j] / mu,
    }
}

// ---------------------------------------------------------------------------
// Alternating directions on the split z = Tx
// ---------------------------------------------------------------------------

/// Iterate state for the two-block split: the image, the transform-domain
/// auxiliary vector constrained to equal `Tx`, and the scaled dual of that
/// constraint.
struct AdmmBasicState<T: Scalar> {
    x: Array2<Cplx<T>>,
    z: Array1<Cplx<T>>,
    eta: Array1<Cplx<T>>,
    mu: T,
}

impl<T: Scalar> AdmmBasicState<T> {
    fn start(x0: &Image<T>, t: &Transform<T>, mu: T) -> Result<Self> {
        let x = x0.data().clone();
        let z = t.apply(&x)?;
        let eta = Array1::zeros(z.len());
        Ok(Self { x, z, eta, mu })
    }

    /// One alternating sweep: shrink the auxiliary vector, re-solve the
    /// image by warm-started CG on the penalized normal equations, ascend
    /// the dual. Returns the constraint residual `‖Tx − z‖` after the sweep.
    fn step(
        &mut self,
        op: &SystemOperator<T>,
        adjoint_y: &Array2<Cplx<T>>,
        t: &Transform<T>,
        lambda: T,
        inner_cg: usize,
    ) -> Result<T> {
        let mu = self.mu;
        let tx = t.apply(&self.x)?;
        for (j, z) in self.z.iter_mut().enumerate() {
            *z = soft_threshold(tx[j] + self.eta[j], threshold_of(t, lambda, mu, j));
        }

        let mut rhs_coeffs = Array1::zeros(self.z.len());
        ndarray::Zip::from(&mut rhs_coeffs).and(&self.z).and(&self.eta).for_each(|r, &z, &e| *r = z - e);
        let mut b = t.apply_adjoint(rhs_coeffs.view(), op.nx(), op.ny())?;
        ndarray::Zip::from(&mut b).and(adjoint_y).for_each(|b, &a| *b = *b * mu + a);
        let h = |v: &Array2<Cplx<T>>| -> Result<Array2<Cplx<T>>> {
            let coeffs = t.apply(v)?;
            let mut out = t.apply_adjoint(coeffs.view(), op.nx(), op.ny())?;
            let gram = op.gram_arr(v);
            ndarray::Zip::from(&mut out).and(&gram).for_each(|o, &g| *o = *o * mu + g);
            Ok(out)
        };
        self.x = cg_core(h, None, &b, &self.x, inner_cg, T::of(1e-14), |_, _| Ok(()))?;
        if !vec::all_finite(&self.x) {
            return Err(ReconError::Solver("non-finite image iterate".into()));
        }

        let tx = t.apply(&self.x)?;
        let mut resid_sq = T::zero();
        ndarray::Zip::from(&mut self.eta).and(&tx).and(&self.z).for_each(|e, &t, &z| {
            let r = t - z;
            resid_sq += r.norm_sqr();
            *e += r;
        });
        Ok(resid_sq.sqrt())
    }
}

/// Alternating-direction solver for the analysis problem via the split
/// `z = Tx`. The transform-domain update is plain soft thresholding; the
/// image update runs `inner_cg` warm-started CG iterations on
/// `(A'A + μT'T)x = A'y + μT'(z − η)`; the scaled dual then ascends by the
/// constraint residual. `mu` defaults to `λ` (or 1 when `λ = 0`) — it moves
/// the convergence rate, not the limit. The trace records the true composite
/// objective each sweep and notes the constraint residual; a residual that
/// fails to improve over 100 sweeps is flagged once as a warning.
pub fn admm_analysis<T: Scalar>(
    op: &SystemOperator<T>,
    y: &KSpaceData<T>,
    t: &Transform<T>,
    lambda: T,
    mu: Option<T>,
    x0: &Image<T>,
    iters: usize,
    inner_cg: usize,
) -> Result<(Image<T>, SolverTrace<T>)> {
    check_problem(op, y, t, lambda, x0)?;
    let mu = mu.unwrap_or(if lambda > T::zero() { lambda } else { T::one() });
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(ReconError::Config(format!("splitting penalty must be positive, got {mu}")));
    }
    if inner_cg == 0 {
        return Err(ReconError::Config("at least one inner CG iteration is required".into()));
    }
    let adjoint_y = op.adjoint_arr(y.samples());
    let mut state = AdmmBasicState::start(x0, t, mu)?;
    let mut trace = SolverTrace::new();
    trace.record(0, composite_cost(op, y, t, lambda, &state.x)?, None);
    let mut residuals: Vec<T> = Vec::with_capacity(iters);
    let mut warned = false;
    for k in 1..=iters {
        let r = state.step(op, &adjoint_y, t, lambda, inner_cg)?;
        trace.record(k, composite_cost(op, y, t, lambda, &state.x)?, None);
        trace.note(format!("iteration {k}: constraint residual {:.6e}", r.f64()));
        if !warned && residuals.len() >= 100 && r > residuals[residuals.len() - 100] {
            trace.note(format!(
                "warning: constraint residual has not improved over the 100 sweeps ending at {k}"
            ));
            warned = true;
        }
        residuals.push(r);
    }
    Ok((Image::new(state.x)?, trace))
}

// ---------------------------------------------------------------------------
// Alternating directions on the multi-variable split u = Cx, z = Tv, v = x
// ---------------------------------------------------------------------------

/// Iterate state for the closed-form split: per-coil images `u` tied to
/// `Cx`, transform coefficients `z` tied to `Tv`, an image copy `v` tied to
/// `x`, and the three scaled duals.
struct AdmmStructuredState<T: Scalar> {
    x: Array2<Cplx<T>>,
    u: Vec<Array2<Cplx<T>>>,
    z: Array1<Cplx<T>>,
    v: Array2<Cplx<T>>,
    eta_u: Vec<Array2<Cplx<T>>>,
    eta_z: Array1<Cplx<T>>,
    eta_v: Array2<Cplx<T>>,
}

/// Constraint residuals after one sweep, in update order.
struct StructuredResiduals<T> {
    coil: T,
    coeff: T,
    copy: T,
}

struct StructuredProblem<'a, T: Scalar> {
    op: &'a SystemOperator<T>,
    t: &'a Transform<T>,
    fft: crate::fft::Fft2<T>,
    /// Zero-filled measured k-space, one grid per coil.
    y_grids: Vec<Array2<Cplx<T>>>,
    /// Eigenvalues of the periodic finite-difference `T'T`, on the k-grid.
    diff_spectrum: Array2<T>,
    lambda: T,
    mu1: T,
    mu2: T,
    mu3: T,
}

impl<'a, T: Scalar> StructuredProblem<'a, T> {
    fn new(
        op: &'a SystemOperator<T>,
        y: &KSpaceData<T>,
        t: &'a Transform<T>,
        lambda: T,
        mu: (T, T, T),
    ) -> Self {
        let (nx, ny) = (op.nx(), op.ny());
        let zero = Cplx::new(T::zero(), T::zero());
        let mut y_grids = vec![Array2::from_elem((nx, ny), zero); op.ncoils()];
        for (i, (kx, ky)) in op.mask().positions().enumerate() {
            for (l, grid) in y_grids.iter_mut().enumerate() {
                grid[[kx, ky]] = y.samples()[[i, l]];
            }
        }
        let two_pi = T::of(std::f64::consts::PI);
        let diff_spectrum = Array2::from_shape_fn((nx, ny), |(k1, k2)| {
            let s1 = (two_pi * T::of(k1 as f64) / T::of(nx as f64)).sin();
            let s2 = (two_pi * T::of(k2 as f64) / T::of(ny as f64)).sin();
            T::of(4.0) * (s1 * s1 + s2 * s2)
        });
        Self {
            op,
            t,
            fft: crate::fft::Fft2::new(nx, ny),
            y_grids,
            diff_spectrum,
            lambda,
            mu1: mu.0,
            mu2: mu.1,
            mu3: mu.2,
        }
    }

    fn n(&self) -> T {
        T::of(self.op.n() as f64)
    }
}

impl<T: Scalar> AdmmStructuredState<T> {
    fn start(x0: &Image<T>, p: &StructuredProblem<'_, T>) -> Result<Self> {
        let x = x0.data().clone();
        let ncoils = p.op.ncoils();
        let mut u = Vec::with_capacity(ncoils);
        for l in 0..ncoils {
            let c = p.op.smaps().coil(l);
            u.push(ndarray::Zip::from(&x).and(&c).map_collect(|&x, &c| c * x));
        }
        let z = p.t.apply(&x)?;
        let zero = Cplx::new(T::zero(), T::zero());
        Ok(Self {
            v: x.clone(),
            eta_u: vec![Array2::from_elem(x.dim(), zero); ncoils],
            eta_z: Array1::zeros(z.len()),
            eta_v: Array2::from_elem(x.dim(), zero),
            x,
            u,
            z,
        })
    }

    /// One Gauss–Seidel sweep over the four primal blocks, each solved
    /// exactly (k-space-diagonal, pixel-diagonal, shrinkage,
    /// difference-spectrum-diagonal), then the three unit-step dual ascents.
    fn step(&mut self, p: &StructuredProblem<'_, T>) -> Result<StructuredResiduals<T>> {
        let n = p.n();
        let (mu1, mu2, mu3) = (p.mu1, p.mu2, p.mu3);

        // per-coil data block: (E'E + μ₁)u = E'y + μ₁(C_l x − η_u), diagonal
        // on the k-grid since E'E there is N on sampled entries, 0 elsewhere
        for l in 0..p.op.ncoils() {
            let c = p.op.smaps().coil(l);
            let mut grid = ndarray::Zip::from(&self.x)
                .and(&c)
                .and(&self.eta_u[l])
                .map_collect(|&x, &c, &e| c * x - e);
            p.fft.forward(&mut grid);
            ndarray::Zip::from(&mut grid).and(&p.y_grids[l]).and(p.op.mask().grid()).for_each(
                |g, &y, &keep| {
                    if keep {
                        *g = (y * n + *g * mu1) / Cplx::new(n + mu1, T::zero());
                    }
                },
            );
            p.fft.backward(&mut grid);
            let inv_n = T::one() / n;
            grid.mapv_inplace(|v| v * inv_n);
            self.u[l] = grid;
        }

        // image block: (μ₁C'C + μ₃I)x = μ₁C'(u + η_u) + μ₃(v + η_v),
        // diagonal per pixel
        let mut num = ndarray::Zip::from(&self.v).and(&self.eta_v).map_collect(|&v, &e| (v + e) * mu3);
        for l in 0..p.op.ncoils() {
            let c = p.op.smaps().coil(l);
            ndarray::Zip::from(&mut num).and(&self.u[l]).and(&self.eta_u[l]).and(&c).for_each(
                |acc, &u, &e, &c| {
                    *acc += c.conj() * (u + e) * mu1;
                },
            );
        }
        let cp = p.op.smaps().coil_power();
        self.x = ndarray::Zip::from(&num).and(&cp).map_collect(|&n, &c| n / Cplx::new(mu1 * c + mu3, T::zero()));

        // coefficient block: shrinkage of Tv − η_z
        let tv = p.t.apply(&self.v)?;
        for (j, z) in self.z.iter_mut().enumerate() {
            *z = soft_threshold(tv[j] - self.eta_z[j], threshold_of(p.t, p.lambda, mu2, j));
        }

        // copy block: (μ₂T'T + μ₃I)v = μ₂T'(z + η_z) + μ₃(x − η_v), diagonal
        // on the k-grid through the difference spectrum
        let mut coeffs = Array1::zeros(self.z.len());
        ndarray::Zip::from(&mut coeffs).and(&self.z).and(&self.eta_z).for_each(|c, &z, &e| *c = z + e);
        let mut rhs = p.t.apply_adjoint(coeffs.view(), p.op.nx(), p.op.ny())?;
        ndarray::Zip::from(&mut rhs).and(&self.x).and(&self.eta_v).for_each(|r, &x, &e| {
            *r = *r * mu2 + (x - e) * mu3;
        });
        p.fft.forward(&mut rhs);
        ndarray::Zip::from(&mut rhs).and(&p.diff_spectrum).for_each(|r, &s| {
            *r /= Cplx::new(mu2 * s + mu3, T::zero());
        });
        p.fft.backward(&mut rhs);
        let inv_n = T::one() / n;
        rhs.mapv_inplace(|v| v * inv_n);
        self.v = rhs;

        // dual ascents, unit step
        let mut res_coil = T::zero();
        for l in 0..p.op.ncoils() {
            let c = p.op.smaps().coil(l);
            ndarray::Zip::from(&mut self.eta_u[l]).and(&self.u[l]).and(&self.x).and(&c).for_each(
                |e, &u, &x, &c| {
                    let r = u - c * x;
                    res_coil += r.norm_sqr();
                    *e += r;
                },
            );
        }
        let tv = p.t.apply(&self.v)?;
        let mut res_coeff = T::zero();
        ndarray::Zip::from(&mut self.eta_z).and(&self.z).and(&tv).for_each(|e, &z, &t| {
            let r = z - t;
            res_coeff += r.norm_sqr();
            *e += r;
        });
        let mut res_copy = T::zero();
        ndarray::Zip::from(&mut self.eta_v).and(&self.v).and(&self.x).for_each(|e, &v, &x| {
            let r = v - x;
            res_copy += r.norm_sqr();
            *e += r;
        });
        if !vec::all_finite(&self.x) {
            return Err(ReconError::Solver("non-finite image iterate".into()));
        }
        Ok(StructuredResiduals {
            coil: res_coil.sqrt(),
            coeff: res_coeff.sqrt(),
            copy: res_copy.sqrt(),
        })
    }
}

/// Alternating-direction solver on the split `u = Cx`, `z = Tv`, `v = x`,
/// chosen so every primal block has an exact closed-form solve: the data
/// block is diagonal in k-space, the image block diagonal per pixel, the
/// coefficient block a shrinkage, and the copy block diagonal in k-space
/// through the periodic-difference spectrum. Requires the periodic
/// finite-difference transform (the copy-block solve depends on its
/// circulant structure). The trace records the composite objective at the
/// image iterate and notes the three constraint residuals each sweep.
pub fn admm_structured<T: Scalar>(
    op: &SystemOperator<T>,
    y: &KSpaceData<T>,
    t: &Transform<T>,
    lambda: T,
    mu1: T,
    mu2: T,
    mu3: T,
    x0: &Image<T>,
    iters: usize,
) -> Result<(Image<T>, SolverTrace<T>)> {
    check_problem(op, y, t, lambda, x0)?;
    if !matches!(t.kind(), TransformKind::FiniteDiff2d) {
        return Err(ReconError::Config(
            "this splitting needs the periodic finite-difference transform; other transforms break \
             its closed-form copy-block solve"
                .into(),
        ));
    }
    for (name, m) in [("mu1", mu1), ("mu2", mu2), ("mu3", mu3)] {
        if !(m > T::zero()) || !m.is_finite() {
            return Err(ReconError::Config(format!("splitting penalty {name} must be positive, got {m}")));
        }
    }
    let p = StructuredProblem::new(op, y, t, lambda, (mu1, mu2, mu3));
    let mut state = AdmmStructuredState::start(x0, &p)?;
    let mut trace = SolverTrace::new();
    trace.record(0, composite_cost(op, y, t, lambda, &state.x)?, None);
    for k in 1..=iters {
        let r = state.step(&p)?;
        trace.record(k, composite_cost(op, y, t, lambda, &state.x)?, None);
        trace.note(format!(
            "iteration {k}: constraint residuals coil {:.6e}, coefficient {:.6e}, copy {:.6e}",
            r.coil.f64(),
            r.coeff.f64(),
            r.copy.f64()
        ));
    }
    Ok((Image::new(state.x)?, trace))
}

/// Splitting penalties sized so each quadratic block of the multi-variable
/// split has condition number (at most) a fixed target κ = 20. The data
/// block `E'E + μ₁I` has eigenvalues in {μ₁, N + μ₁}, so `μ₁ = N/(κ−1)`
/// makes its condition exactly κ. With `b` the transform's spectral bound
/// (8 for periodic differences), `μ₃/μ₂ = b/(κ−1)` caps the copy block
/// `μ₂T'T + μ₃I` at κ, and `μ₂ = μ₁/b` balances the image block
/// `μ₁C'C + μ₃I` at κ for normalized maps.
pub fn condition_penalties<T: Scalar>(op: &SystemOperator<T>, t: &Transform<T>) -> (T, T, T) {
    let kappa = T::of(KAPPA);
    let b = t.op_norm_sq_bound();
    let mu1 = T::of(op.n() as f64) / (kappa - T::one());
    let mu2 = mu1 / b;
    let mu3 = b * mu2 / (kappa - T::one());
    (mu1, mu2, mu3)
}

// ---------------------------------------------------------------------------
// First-order primal-dual iteration
// ---------------------------------------------------------------------------

/// Scale a complex vector entrywise into the unit-modulus ball:
/// `z ← z / max(1, |z|)`. Entries already inside are returned bit-exactly.
fn project_unit_ball<T: Scalar>(z: &mut Array1<Cplx<T>>) {
    for v in z.iter_mut() {
        let m = v.norm();
        if m > T::one() {
            *v /= Cplx::new(m, T::zero());
        }
    }
}

struct PrimalDualState<T: Scalar> {
    x: Array2<Cplx<T>>,
    z: Array1<Cplx<T>>,
    xbar: Array2<Cplx<T>>,
}

impl<T: Scalar> PrimalDualState<T> {
    fn start(x0: &Image<T>, k: usize) -> Self {
        Self { x: x0.data().clone(), z: Array1::zeros(k), xbar: x0.data().clone() }
    }

    /// One ascent/descent pair: dual gradient step on the over-relaxed point
    /// followed by projection into the unit ball, then a primal gradient
    /// step through the data term and the weighted adjoint of the dual,
    /// then over-relaxation `x̄ = 2x⁺ − x`.
    fn step(
        &mut self,
        op: &SystemOperator<T>,
        adjoint_y: &Array2<Cplx<T>>,
        t: &Transform<T>,
        lambda: T,
        tau: T,
        sigma: T,
    ) -> Result<()> {
        let txbar = t.apply(&self.xbar)?;
        ndarray::Zip::from(&mut self.z).and(&txbar).for_each(|z, &c| *z += c * sigma);
        project_unit_ball(&mut self.z);

        let mut grad = op.data_grad_arr(&self.x, adjoint_y);
        let reg = t.apply_adjoint(self.z.view(), op.nx(), op.ny())?;
        ndarray::Zip::from(&mut grad).and(&reg).for_each(|g, &r| *g += r * lambda);
        let mut x_next = self.x.clone();
        vec::axpy(-tau, &grad, &mut x_next);
        ndarray::Zip::from(&mut self.xbar).and(&x_next).and(&self.x).for_each(|b, &xn, &xo| {
            *b = xn + xn - xo;
        });
        self.x = x_next;
        if !vec::all_finite(&self.x) {
            return Err(ReconError::Solver("non-finite image iterate".into()));
        }
        Ok(())
    }
}

/// First-order primal-dual solver: the one-norm is handled through its dual
/// ball constraint, so each iteration alternates a projected dual ascent
/// `z ← proj(z + σT x̄)` with an explicit primal gradient step
/// `x ← x − τ(A'(Ax − y) + λT'z)` — no inner linear solves. Steps default to
/// `τ = 1/L_A` and the largest σ passing the stability check
/// `τ(L_A/2 + max(λ,1)·σ·‖T‖²) ≤ 1`, which is enforced for supplied steps
/// too (the max(λ,1) factor accounts for the λ-scaled coupling, making the
/// check valid for every λ). Weighted transforms are not supported — the
/// dual constraint set assumes one uniform penalty scale.
pub fn primal_dual<T: Scalar>(
    op: &SystemOperator<T>,
    y: &KSpaceData<T>,
    t: &Transform<T>,
    lambda: T,
    tau: Option<T>,
    sigma: Option<T>,
    x0: &Image<T>,
    iters: usize,
) -> Result<(Image<T>, SolverTrace<T>)> {
    let k = check_problem(op, y, t, lambda, x0)?;
    if t.weights().is_some() {
        return Err(ReconError::Config(
            "weighted transforms are not supported by the primal-dual scheme".into(),
        ));
    }
    let big_l = op.lipschitz();
    let bound = t.op_norm_sq_bound();
    let coupling = lambda.max(T::one());
    let tau = tau.unwrap_or(T::one() / big_l);
    let sigma = sigma.unwrap_or_else(|| big_l / (T::of(2.0) * coupling * bound));
    for (name, s) in [("tau", tau), ("sigma", sigma)] {
        if !(s > T::zero()) || !s.is_finite() {
            return Err(ReconError::Config(format!("step size {name} must be positive, got {s}")));
        }
    }
    let stability = tau * (big_l * T::of(0.5) + coupling * sigma * bound);
    if stability > T::one() + T::of(1e-12) {
        return Err(ReconError::Config(format!(
            "step sizes violate the stability bound: tau·(L/2 + max(lambda,1)·sigma·‖T‖²) = {stability} > 1"
        )));
    }
    let adjoint_y = op.adjoint_arr(y.samples());
    let mut state = PrimalDualState::start(x0, k);
    let mut trace = SolverTrace::new();
    trace.record(0, composite_cost(op, y, t, lambda, &state.x)?, None);
    for k in 1..=iters {
        state.step(op, &adjoint_y, t, lambda, tau, sigma)?;
        trace.record(k, composite_cost(op, y, t, lambda, &state.x)?, None);
    }
    Ok((Image::new(state.x)?, trace))
}
