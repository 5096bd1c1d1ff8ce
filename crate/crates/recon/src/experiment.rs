//! Turning a configuration into a run: build the scene, simulate the
//! measurements, dispatch the requested solvers, and write every artifact
//! (exact complex data, previews, per-solver traces, and a summary) into
//! the output directory deterministically.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use recon_core::{
    admm_analysis, admm_structured, cg_quadratic, coil_combine, condition_penalties, fista,
    gradient_descent, ista, ncg, ogm, pogm, primal_dual, select_majorizer, sense_block_solve, vec,
    CompositeCost, Image64, KSpaceData64, Potential, Precond, ProxOpts, SmoothCost, SolveOpts,
    SolverTrace, SystemOperator, SystemOperator64, Transform,
};

use crate::config::{ExperimentConfig, LambdaRule, ModelSpec, SolverName};
use crate::error::{write_err, HarnessError, Result};
use crate::formats;
use crate::mask::{make_mask, MaskKind};
use crate::metrics::nrmse;
use crate::phantom::make_phantom;
use crate::sim::simulate;
use crate::smaps::make_smaps;

/// A fully built problem instance: ground truth, forward model, simulated
/// measurements, the shared starting point, and the resolved penalty weight.
pub struct Assembled {
    pub truth: Image64,
    pub op: SystemOperator64,
    pub data: KSpaceData64,
    /// Adjoint reconstruction scaled to image level (`A'y/N`) — the starting
    /// point every iterative solver shares.
    pub x0: Image64,
    /// Resolved penalty weight; absent for the direct models.
    pub lambda: Option<f64>,
    pub realized_fraction: f64,
    pub requested_fraction: Option<f64>,
}

/// Builds the scene a configuration describes. The penalty weight is
/// resolved here: a fixed value passes through, and the automatic rule
/// scales the peak magnitude of the adjoint reconstruction so that the
/// penalty tracks the data level.
pub fn assemble(cfg: &ExperimentConfig) -> Result<Assembled> {
    let truth = make_phantom(&cfg.phantom)?;
    let (nx, ny) = (truth.nx(), truth.ny());
    let mask = make_mask(&cfg.mask, nx, ny)?;
    let realized_fraction = mask.fraction();
    let requested_fraction = match cfg.mask.kind {
        MaskKind::VariableDensityLines { fraction, .. } | MaskKind::PoissonDisc { fraction, .. } => {
            Some(fraction)
        }
        MaskKind::Full | MaskKind::EveryNth(_) => None,
    };
    let smaps = make_smaps(&cfg.smaps, nx, ny)?;
    let op = SystemOperator::new(mask, smaps)?;
    let data = simulate(&op, &truth, cfg.snr_db, cfg.seed)?;
    let adj = op.adjoint(&data)?;
    let n = op.n() as f64;
    let x0 = Image64::new(adj.data().mapv(|v| v / n))?;
    let lambda = match cfg.model.lambda_rule() {
        None => None,
        Some(LambdaRule::Fixed(v)) => Some(v),
        Some(LambdaRule::Auto { scale }) => Some(scale * vec::max_abs(adj.data())),
    };
    Ok(Assembled { truth, op, data, x0, lambda, realized_fraction, requested_fraction })
}

/// One solver's outcome: the reconstruction and its iteration trace.
#[derive(Clone, Debug)]
pub struct SolverRun {
    pub name: &'static str,
    pub image: Image64,
    pub trace: SolverTrace<f64>,
}

impl SolverRun {
    /// Iterations actually taken (the trace also records the start).
    pub fn iterations(&self) -> usize {
        self.trace.records().len().saturating_sub(1)
    }
}

fn allowed_solvers(model: &ModelSpec) -> &'static [SolverName] {
    match model {
        ModelSpec::CoilCombine | ModelSpec::SenseUnfold => &[],
        ModelSpec::Quadratic { .. } => &[
            SolverName::Cg,
            SolverName::Pcg,
            SolverName::Gd,
            SolverName::Ncg,
            SolverName::Ogm,
        ],
        ModelSpec::EdgePreserving { .. } => &[SolverName::Gd, SolverName::Ncg, SolverName::Ogm],
        ModelSpec::L1Synthesis { .. } => &[SolverName::Ista, SolverName::Fista, SolverName::Pogm],
        ModelSpec::Tv { .. } => &[SolverName::Admm, SolverName::AdmmStructured, SolverName::Pd],
    }
}

fn check_pairings(cfg: &ExperimentConfig) -> Result<()> {
    let allowed = allowed_solvers(&cfg.model);
    if allowed.is_empty() {
        return Ok(()); // direct model; the solver list is ignored
    }
    for name in &cfg.solver.names {
        if !allowed.contains(name) {
            let options: Vec<&str> = allowed.iter().map(SolverName::as_str).collect();
            return Err(HarnessError::Config(format!(
                "solver {} does not apply to the {} model; choose one of {}",
                name.as_str(),
                cfg.model.name(),
                options.join(", ")
            )));
        }
    }
    Ok(())
}

/// The work items a configuration implies: the direct method's name, or one
/// entry per requested iterative solver.
fn plan(cfg: &ExperimentConfig) -> Result<Vec<Job>> {
    check_pairings(cfg)?;
    Ok(match &cfg.model {
        ModelSpec::CoilCombine => vec![Job::Direct("coil_combine")],
        ModelSpec::SenseUnfold => vec![Job::Direct("sense_unfold")],
        _ => cfg.solver.names.iter().map(|n| Job::Iterative(*n)).collect(),
    })
}

#[derive(Clone, Copy)]
enum Job {
    Direct(&'static str),
    Iterative(SolverName),
}

impl Job {
    fn name(&self) -> &'static str {
        match self {
            Job::Direct(n) => n,
            Job::Iterative(n) => n.as_str(),
        }
    }
}

/// Residual cost `½‖Ax − y‖²` of an image against the measured data.
fn data_fit(op: &SystemOperator64, data: &KSpaceData64, x: &Image64) -> Result<f64> {
    let predicted = op.forward(x)?;
    Ok(0.5 * vec::norm_sq(&vec::sub(predicted.samples(), data.samples())))
}

fn solve_direct(cfg: &ExperimentConfig, asm: &Assembled, name: &'static str) -> Result<SolverRun> {
    let image = match name {
        "coil_combine" => coil_combine(&asm.data, asm.op.smaps())?,
        "sense_unfold" => {
            let MaskKind::EveryNth(n) = cfg.mask.kind else {
                return Err(HarnessError::Config(
                    "sense_unfold needs mask.kind = every_nth (it solves the aliasing pattern that \
                     mask creates)"
                        .into(),
                ));
            };
            if cfg.mask.center_band != 0 {
                return Err(HarnessError::Config(
                    "sense_unfold needs mask.center_band = 0; extra rows break the exact aliasing \
                     pattern"
                        .into(),
                ));
            }
            sense_block_solve(&asm.data, asm.op.smaps(), n)?
        }
        other => return Err(HarnessError::Config(format!("unknown direct method {other}"))),
    };
    let mut trace = SolverTrace::new();
    trace.record(0, data_fit(&asm.op, &asm.data, &image)?, Some(nrmse(&image, &asm.truth)?));
    Ok(SolverRun { name, image, trace })
}

fn solve_smooth(
    cfg: &ExperimentConfig,
    asm: &Assembled,
    name: SolverName,
    potential: Potential<f64>,
) -> Result<SolverRun> {
    let t = Transform::finite_diff_2d();
    let lambda = asm.lambda.expect("smooth models carry a penalty weight");
    let cost = SmoothCost::new(&asm.op, &asm.data, lambda, &t, potential)?;
    let opts = SolveOpts { rel_tol: cfg.solver.tol, reference: Some(&asm.truth) };
    let iters = cfg.solver.iters;
    let (image, trace) = match name {
        SolverName::Cg => cg_quadratic(&cost, &asm.x0, iters, Precond::None, &opts)?,
        SolverName::Pcg => cg_quadratic(&cost, &asm.x0, iters, Precond::Circulant, &opts)?,
        SolverName::Gd => gradient_descent(&cost, &asm.x0, iters, None, &opts)?,
        SolverName::Ncg => ncg(&cost, &asm.x0, iters, &opts)?,
        SolverName::Ogm => ogm(&cost, &asm.x0, iters, None, cfg.solver.restart.to_core(), &opts)?,
        other => {
            return Err(HarnessError::Config(format!(
                "solver {} does not run on a smooth cost",
                other.as_str()
            )))
        }
    };
    Ok(SolverRun { name: name.as_str(), image, trace })
}

fn solve_synthesis(
    cfg: &ExperimentConfig,
    asm: &Assembled,
    name: SolverName,
    levels: usize,
) -> Result<SolverRun> {
    let t = Transform::odwt(levels)?;
    let lambda = asm.lambda.expect("the synthesis model carries a penalty weight");
    let cost = CompositeCost::new(&asm.op, &asm.data, &t, lambda)?;
    let z0 = t.apply(asm.x0.data())?;
    // The synthesis transform is orthonormal, so coefficient-space relative
    // error equals image-space relative error and the trace column stays
    // directly comparable with the smooth solvers'.
    let z_truth = t.apply(asm.truth.data())?;
    let opts = ProxOpts { rel_tol: cfg.solver.tol, reference: Some(&z_truth) };
    let majorizer = select_majorizer(&asm.op, &t)?;
    let iters = cfg.solver.iters;
    let (z, trace) = match name {
        SolverName::Ista => ista(&cost, &z0, iters, &majorizer, &opts)?,
        SolverName::Fista => fista(&cost, &z0, iters, &majorizer, &opts)?,
        SolverName::Pogm => pogm(
            &cost,
            &z0,
            iters,
            majorizer.scalar_bound(),
            cfg.solver.restart.to_core(),
            &opts,
        )?,
        other => {
            return Err(HarnessError::Config(format!(
                "solver {} does not run on the synthesis cost",
                other.as_str()
            )))
        }
    };
    let image = Image64::new(cost.image_of(&z)?)?;
    Ok(SolverRun { name: name.as_str(), image, trace })
}

fn solve_tv(cfg: &ExperimentConfig, asm: &Assembled, name: SolverName) -> Result<SolverRun> {
    let t = Transform::finite_diff_2d();
    let lambda = asm.lambda.expect("the tv model carries a penalty weight");
    let iters = cfg.solver.iters;
    let (image, trace) = match name {
        SolverName::Admm => admm_analysis(
            &asm.op,
            &asm.data,
            &t,
            lambda,
            cfg.solver.mu,
            &asm.x0,
            iters,
            cfg.solver.inner_cg,
        )?,
        SolverName::AdmmStructured => {
            let (mu1, mu2, mu3) = match cfg.solver.mu {
                Some(mu) => (mu, mu, mu),
                None => condition_penalties(&asm.op, &t),
            };
            admm_structured(&asm.op, &asm.data, &t, lambda, mu1, mu2, mu3, &asm.x0, iters)?
        }
        SolverName::Pd => primal_dual(&asm.op, &asm.data, &t, lambda, None, None, &asm.x0, iters)?,
        other => {
            return Err(HarnessError::Config(format!(
                "solver {} does not run on the tv cost",
                other.as_str()
            )))
        }
    };
    Ok(SolverRun { name: name.as_str(), image, trace })
}

fn solve_job(cfg: &ExperimentConfig, asm: &Assembled, job: Job) -> Result<SolverRun> {
    match (job, &cfg.model) {
        (Job::Direct(name), _) => solve_direct(cfg, asm, name),
        (Job::Iterative(name), ModelSpec::Quadratic { .. }) => {
            solve_smooth(cfg, asm, name, Potential::Quadratic)
        }
        (Job::Iterative(name), ModelSpec::EdgePreserving { delta, .. }) => {
            solve_smooth(cfg, asm, name, Potential::fair(*delta)?)
        }
        (Job::Iterative(name), ModelSpec::L1Synthesis { levels, .. }) => {
            solve_synthesis(cfg, asm, name, *levels)
        }
        (Job::Iterative(name), ModelSpec::Tv { .. }) => solve_tv(cfg, asm, name),
        (Job::Iterative(_), ModelSpec::CoilCombine | ModelSpec::SenseUnfold) => Err(
            HarnessError::Config("direct models dispatch no iterative solvers".into()),
        ),
    }
}

/// Runs every solver the configuration requests, in order, without touching
/// the filesystem. Stops at the first failure.
pub fn solve_all(cfg: &ExperimentConfig, asm: &Assembled) -> Result<Vec<SolverRun>> {
    plan(cfg)?.into_iter().map(|job| solve_job(cfg, asm, job)).collect()
}

/// One solver's entry in the run summary.
#[derive(Clone, Debug)]
pub struct SolverSummary {
    pub name: &'static str,
    pub final_cost: f64,
    pub final_nrmse: f64,
    pub iterations: usize,
}

/// Everything a finished (or partially finished) run reports.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub realized_fraction: f64,
    pub requested_fraction: Option<f64>,
    pub lambda: Option<f64>,
    pub snr_db: f64,
    pub solvers: Vec<SolverSummary>,
    /// Notes the solvers emitted (flagged residuals, restarts, …), prefixed
    /// with the solver name. Reported to the caller, not written to disk.
    pub notes: Vec<String>,
}

fn summary_text(s: &RunSummary, error: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "realized_fraction = {}", s.realized_fraction);
    if let Some(f) = s.requested_fraction {
        let _ = writeln!(out, "requested_fraction = {f}");
    }
    if let Some(l) = s.lambda {
        let _ = writeln!(out, "lambda = {l}");
    }
    let _ = writeln!(out, "snr_db = {}", s.snr_db);
    for sv in &s.solvers {
        let _ = writeln!(out, "solver.{}.final_cost = {}", sv.name, sv.final_cost);
        let _ = writeln!(out, "solver.{}.final_nrmse = {}", sv.name, sv.final_nrmse);
        let _ = writeln!(out, "solver.{}.iterations = {}", sv.name, sv.iterations);
    }
    if let Some(msg) = error {
        let _ = writeln!(out, "error = {}", msg.replace('\n', " "));
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| write_err(path, e))
}

/// Writes the scene files every run shares: the resolved configuration, the
/// ground truth, the sampling mask, the coil maps, and the simulated
/// k-space data.
fn write_dataset(cfg: &ExperimentConfig, asm: &Assembled, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    write_text(&dir.join("resolved-config.txt"), &cfg.to_text())?;
    formats::write_image(&dir.join("truth.cplx1"), &asm.truth)?;
    if cfg.output.pgm {
        formats::write_pgm(&dir.join("truth.pgm"), &asm.truth)?;
    }
    formats::write_mask(&dir.join("mask.mask1"), asm.op.mask())?;
    formats::write_smaps(&dir.join("smaps.cplx1"), asm.op.smaps())?;
    formats::write_samples(&dir.join("kspace.cplx1"), asm.data.samples())?;
    Ok(())
}

fn start_summary(cfg: &ExperimentConfig, asm: &Assembled, dir: &Path) -> RunSummary {
    RunSummary {
        out_dir: dir.to_path_buf(),
        realized_fraction: asm.realized_fraction,
        requested_fraction: asm.requested_fraction,
        lambda: asm.lambda,
        snr_db: cfg.snr_db,
        solvers: Vec::new(),
        notes: Vec::new(),
    }
}

/// Builds the dataset the configuration describes and writes it (without
/// solving anything) into `dir`.
pub fn simulate_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let asm = assemble(cfg)?;
    write_dataset(cfg, &asm, dir)?;
    let summary = start_summary(cfg, &asm, dir);
    write_text(&dir.join("summary.txt"), &summary_text(&summary, None))?;
    Ok(summary)
}

/// Runs the full experiment into `dir`: dataset files, one trace CSV and
/// reconstruction per solver, and a summary. Every byte written is a pure
/// function of the configuration, so rerunning reproduces identical files.
/// If a solver fails, everything already finished stays on disk, the
/// summary records the error, and the failure is returned.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let jobs = plan(cfg)?;
    let asm = assemble(cfg)?;
    write_dataset(cfg, &asm, dir)?;
    let mut summary = start_summary(cfg, &asm, dir);
    for job in jobs {
        let run = match solve_job(cfg, &asm, job) {
            Ok(run) => run,
            Err(e) => {
                let msg = format!("solver {} failed: {e}", job.name());
                write_text(&dir.join("summary.txt"), &summary_text(&summary, Some(&msg)))?;
                return Err(e);
            }
        };
        let name = run.name;
        formats::write_trace_csv(
            &dir.join(format!("{name}.trace.csv")),
            &run.trace,
            cfg.output.wall_clock,
        )?;
        formats::write_image(&dir.join(format!("{name}.cplx1")), &run.image)?;
        if cfg.output.pgm {
            formats::write_pgm(&dir.join(format!("{name}.pgm")), &run.image)?;
        }
        let final_cost = run.trace.last_cost().ok_or_else(|| {
            HarnessError::Run(format!("solver {name} produced an empty trace"))
        })?;
        summary.solvers.push(SolverSummary {
            name,
            final_cost,
            final_nrmse: nrmse(&run.image, &asm.truth)?,
            iterations: run.iterations(),
        });
        for note in run.trace.notes() {
            summary.notes.push(format!("{name}: {note}"));
        }
    }
    write_text(&dir.join("summary.txt"), &summary_text(&summary, None))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, OutputSpec, SolverSpec};
    use crate::mask::MaskSpec;
    use crate::phantom::{PhantomKind, PhantomSpec};
    use crate::smaps::SmapsSpec;

    fn small_cfg(extra: &str) -> ExperimentConfig {
        let base = format!(
            "phantom.nx = 16\nphantom.ny = 16\nsmaps.count = 2\nnoise.snr_db = 40\n{extra}"
        );
        parse_config(&base).unwrap()
    }

    #[test]
    fn assemble_resolves_the_automatic_penalty_from_the_adjoint_peak() {
        let cfg = small_cfg("model.name = quadratic\nmodel.lambda = auto\nmodel.lambda_scale = 0.05\n");
        let asm = assemble(&cfg).unwrap();
        let adj = asm.op.adjoint(&asm.data).unwrap();
        let expected = 0.05 * recon_core::vec::max_abs(adj.data());
        assert_eq!(asm.lambda, Some(expected));
        // The start is the adjoint scaled down to image level.
        let n = asm.op.n() as f64;
        let diff = recon_core::vec::sub(asm.x0.data(), &adj.data().mapv(|v| v / n));
        assert_eq!(recon_core::vec::max_abs(&diff), 0.0);
    }

    #[test]
    fn mismatched_solver_and_model_is_a_config_error() {
        let cfg = small_cfg("model.name = tv\nmodel.lambda = 0.1\nsolver.name = cg\n");
        let err = run_experiment(&cfg, tempfile::tempdir().unwrap().path()).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)), "{err}");
        assert!(err.to_string().contains("does not apply"), "{err}");
    }

    #[test]
    fn direct_models_validate_their_mask_geometry() {
        let mut cfg = small_cfg("model.name = sense_unfold\n");
        cfg.mask = MaskSpec { kind: MaskKind::EveryNth(2), center_band: 2 };
        let err = solve_all(&cfg, &assemble(&cfg).unwrap()).unwrap_err();
        assert!(err.to_string().contains("center_band"), "{err}");

        cfg.mask = MaskSpec { kind: MaskKind::Full, center_band: 0 };
        let err = solve_all(&cfg, &assemble(&cfg).unwrap()).unwrap_err();
        assert!(err.to_string().contains("every_nth"), "{err}");
    }

    #[test]
    fn quadratic_run_writes_all_artifacts_and_the_trace_has_the_full_budget() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            phantom: PhantomSpec { kind: PhantomKind::SheppLogan, nx: 16, ny: 16, complex: false },
            mask: MaskSpec { kind: MaskKind::EveryNth(2), center_band: 2 },
            smaps: SmapsSpec { count: 2, ..Default::default() },
            snr_db: 40.0,
            model: ModelSpec::Quadratic { lambda: LambdaRule::Auto { scale: 0.01 } },
            solver: SolverSpec { names: vec![SolverName::Cg], iters: 12, ..Default::default() },
            output: OutputSpec::default(),
            seed: 1,
        };
        let summary = run_experiment(&cfg, dir.path()).unwrap();
        for file in [
            "resolved-config.txt",
            "truth.cplx1",
            "truth.pgm",
            "mask.mask1",
            "smaps.cplx1",
            "kspace.cplx1",
            "cg.trace.csv",
            "cg.cplx1",
            "cg.pgm",
            "summary.txt",
        ] {
            assert!(dir.path().join(file).exists(), "missing {file}");
        }
        assert_eq!(summary.solvers.len(), 1);
        assert_eq!(summary.solvers[0].iterations, 12);
        let rows = formats::read_trace_csv(&dir.path().join("cg.trace.csv")).unwrap();
        assert_eq!(rows.len(), 13, "start plus one row per iteration");
        assert_eq!(rows[0].0, 0);
        assert!(rows.last().unwrap().1 <= rows[0].1, "cost should not grow");
        let text = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(text.contains("solver.cg.final_cost = "), "{text}");
        assert!(text.contains("solver.cg.iterations = 12"), "{text}");
    }

    #[test]
    fn reruns_write_byte_identical_artifacts() {
        let cfg = small_cfg(
            "mask.kind = variable_density_lines\nmask.fraction = 0.5\nmask.center_band = 2\n\
             model.name = l1_synthesis\nmodel.levels = 2\nsolver.name = fista\nsolver.iters = 8\n",
        );
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_experiment(&cfg, a.path()).unwrap();
        run_experiment(&cfg, b.path()).unwrap();
        for file in ["truth.cplx1", "kspace.cplx1", "fista.trace.csv", "fista.cplx1", "summary.txt"] {
            let x = std::fs::read(a.path().join(file)).unwrap();
            let y = std::fs::read(b.path().join(file)).unwrap();
            assert_eq!(x, y, "{file} differs between identical runs");
        }
    }

    #[test]
    fn coil_combine_on_full_noiseless_data_recovers_the_truth() {
        let cfg = small_cfg("model.name = coil_combine\n");
        let mut cfg = cfg;
        cfg.snr_db = f64::INFINITY;
        let asm = assemble(&cfg).unwrap();
        let runs = solve_all(&cfg, &asm).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].name, "coil_combine");
        assert!(nrmse(&runs[0].image, &asm.truth).unwrap() < 1e-10);
        assert_eq!(runs[0].iterations(), 0);
    }

    #[test]
    fn all_three_tv_solvers_run_from_one_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg(
            "mask.kind = every_nth\nmask.n = 2\nmask.center_band = 2\n\
             model.name = tv\nmodel.lambda = 0.05\nsolver.name = admm, admm_structured, pd\n\
             solver.iters = 5\n",
        );
        let summary = run_experiment(&cfg, dir.path()).unwrap();
        assert_eq!(summary.solvers.len(), 3);
        for name in ["admm", "admm_structured", "pd"] {
            assert!(dir.path().join(format!("{name}.trace.csv")).exists(), "missing {name}");
        }
    }

    #[test]
    fn a_failing_solver_leaves_the_dataset_and_an_error_summary_behind() {
        // The unfolding model's mask requirement is only checked when the
        // solve runs, after the dataset files are already written — which is
        // exactly the partial-output contract a failed run must honor.
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg("model.name = sense_unfold\n");
        let err = run_experiment(&cfg, dir.path()).unwrap_err();
        assert!(err.to_string().contains("every_nth"), "{err}");
        for file in ["truth.cplx1", "mask.mask1", "kspace.cplx1", "summary.txt"] {
            assert!(dir.path().join(file).exists(), "missing {file}");
        }
        let text = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(text.contains("error = solver sense_unfold failed"), "{text}");
    }
}
