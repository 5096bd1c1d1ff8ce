//! Experiment configuration: a flat, diff-friendly `key = value` text
//! format with dotted sections (`solver.name = pogm`), plus an equivalent
//! JSON representation accepted interchangeably. Parsing is strict — every
//! key must be known *and* applicable to the chosen kinds — and the
//! canonical writer round-trips exactly, so a written configuration always
//! reproduces the run that produced it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{read_err, HarnessError, Result};
use crate::mask::{MaskKind, MaskSpec};
use crate::phantom::{PhantomKind, PhantomSpec};
use crate::smaps::{SmapsProfile, SmapsSpec};

/// How the data-fit/penalty trade-off is chosen: a fixed value, or scaled
/// off the peak magnitude of the adjoint reconstruction (`scale·‖A'y‖_∞`),
/// which adapts to the data without hand tuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaRule {
    Auto { scale: f64 },
    Fixed(f64),
}

impl Default for LambdaRule {
    fn default() -> Self {
        Self::Auto { scale: 0.01 }
    }
}

/// The reconstruction formulation to solve. Direct (non-iterative) methods
/// carry no parameters; iterative formulations carry exactly the parameters
/// they use.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    /// Direct optimal combination; requires full sampling.
    CoilCombine,
    /// Direct aliasing unfolding; requires an every-nth-row mask.
    SenseUnfold,
    /// Quadratic roughness penalty on finite differences.
    Quadratic { lambda: LambdaRule },
    /// Edge-preserving smooth penalty (Fair potential) on finite differences.
    EdgePreserving { lambda: LambdaRule, delta: f64 },
    /// One-norm penalty on orthogonal wavelet synthesis coefficients.
    L1Synthesis { lambda: LambdaRule, levels: usize },
    /// One-norm penalty on finite differences (anisotropic total variation).
    Tv { lambda: LambdaRule },
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::Quadratic { lambda: LambdaRule::default() }
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CoilCombine => "coil_combine",
            Self::SenseUnfold => "sense_unfold",
            Self::Quadratic { .. } => "quadratic",
            Self::EdgePreserving { .. } => "edge_preserving",
            Self::L1Synthesis { .. } => "l1_synthesis",
            Self::Tv { .. } => "tv",
        }
    }

    pub fn lambda_rule(&self) -> Option<LambdaRule> {
        match self {
            Self::CoilCombine | Self::SenseUnfold => None,
            Self::Quadratic { lambda }
            | Self::EdgePreserving { lambda, .. }
            | Self::L1Synthesis { lambda, .. }
            | Self::Tv { lambda } => Some(*lambda),
        }
    }

    pub fn lambda_rule_mut(&mut self) -> Option<&mut LambdaRule> {
        match self {
            Self::CoilCombine | Self::SenseUnfold => None,
            Self::Quadratic { lambda }
            | Self::EdgePreserving { lambda, .. }
            | Self::L1Synthesis { lambda, .. }
            | Self::Tv { lambda } => Some(lambda),
        }
    }
}

/// Algorithms the runner can dispatch. Which ones are legal depends on the
/// model; the pairing is validated when the experiment starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverName {
    /// Conjugate gradient (quadratic model only).
    Cg,
    /// Circulant-preconditioned conjugate gradient (quadratic model only).
    Pcg,
    /// Fixed-step gradient descent.
    Gd,
    /// Nonlinear conjugate gradient with line search.
    Ncg,
    /// Accelerated gradient method on a smooth cost.
    Ogm,
    /// Iterative soft thresholding on synthesis coefficients.
    Ista,
    /// Momentum-accelerated soft thresholding.
    Fista,
    /// Proximal optimized gradient method.
    Pogm,
    /// Alternating-direction splitting with an inner conjugate-gradient solve.
    Admm,
    /// Alternating-direction splitting with closed-form blocks.
    AdmmStructured,
    /// Primal-dual (no inner solves).
    Pd,
}

impl SolverName {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Cg => "cg",
            Self::Pcg => "pcg",
            Self::Gd => "gd",
            Self::Ncg => "ncg",
            Self::Ogm => "ogm",
            Self::Ista => "ista",
            Self::Fista => "fista",
            Self::Pogm => "pogm",
            Self::Admm => "admm",
            Self::AdmmStructured => "admm_structured",
            Self::Pd => "pd",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "cg" => Self::Cg,
            "pcg" => Self::Pcg,
            "gd" => Self::Gd,
            "ncg" => Self::Ncg,
            "ogm" => Self::Ogm,
            "ista" => Self::Ista,
            "fista" => Self::Fista,
            "pogm" => Self::Pogm,
            "admm" => Self::Admm,
            "admm_structured" => Self::AdmmStructured,
            "pd" => Self::Pd,
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown solver {other:?}; expected one of cg, pcg, gd, ncg, ogm, ista, \
                     fista, pogm, admm, admm_structured, pd"
                )))
            }
        })
    }
}

/// Momentum restart policy for the accelerated methods (read by ogm/pogm;
/// ignored by the rest).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RestartRule {
    #[default]
    Off,
    FunctionValue,
    GradientAngle,
}

impl RestartRule {
    fn as_str(&self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::FunctionValue => "function_value",
            Self::GradientAngle => "gradient_angle",
        }
    }

    pub fn to_core(self) -> recon_core::Restart {
        match self {
            Self::Off => recon_core::Restart::Off,
            Self::FunctionValue => recon_core::Restart::FunctionValue,
            Self::GradientAngle => recon_core::Restart::GradientAngle,
        }
    }
}

/// Which algorithms to run (all on the same problem) and their shared
/// iteration knobs.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub names: Vec<SolverName>,
    /// Iteration budget; every solver also records its starting point.
    pub iters: usize,
    /// Optional early-stop tolerance (relative residual for cg/pcg,
    /// relative cost change for the rest).
    pub tol: Option<f64>,
    pub restart: RestartRule,
    /// Splitting penalty for admm (all three blocks when structured);
    /// defaults to a conditioned choice.
    pub mu: Option<f64>,
    /// Inner conjugate-gradient steps per admm sweep.
    pub inner_cg: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { names: vec![SolverName::Cg], iters: 50, tol: None, restart: RestartRule::Off, mu: None, inner_cg: 4 }
    }
}

/// Where and what to write.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    /// Output directory; may be overridden or supplied by `--out`.
    pub dir: Option<PathBuf>,
    /// Also write 8-bit magnitude previews next to the exact data.
    pub pgm: bool,
    /// Write real wall-clock seconds into trace CSVs instead of the
    /// reproducible `0` (documented as breaking byte-identical traces).
    pub wall_clock: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, pgm: true, wall_clock: false }
    }
}

/// A complete, reproducible description of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub phantom: PhantomSpec,
    pub mask: MaskSpec,
    pub smaps: SmapsSpec,
    /// Measurement SNR in dB; infinite means noiseless.
    pub snr_db: f64,
    pub model: ModelSpec,
    pub solver: SolverSpec,
    pub output: OutputSpec,
    /// Seed for the measurement noise draw.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phantom: PhantomSpec::default(),
            mask: MaskSpec::default(),
            smaps: SmapsSpec::default(),
            snr_db: f64::INFINITY,
            model: ModelSpec::default(),
            solver: SolverSpec::default(),
            output: OutputSpec::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Canonical flat-text form; parsing it reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kind = match &self.phantom.kind {
            PhantomKind::SheppLogan => "shepp_logan",
            PhantomKind::Blocks => "blocks",
            PhantomKind::File(_) => "file",
        };
        let _ = writeln!(s, "phantom.kind = {kind}");
        if let PhantomKind::File(p) = &self.phantom.kind {
            let _ = writeln!(s, "phantom.file = {}", p.display());
        }
        let _ = writeln!(s, "phantom.nx = {}", self.phantom.nx);
        let _ = writeln!(s, "phantom.ny = {}", self.phantom.ny);
        let _ = writeln!(s, "phantom.complex = {}", self.phantom.complex);
        match self.mask.kind {
            MaskKind::Full => {
                let _ = writeln!(s, "mask.kind = full");
            }
            MaskKind::EveryNth(n) => {
                let _ = writeln!(s, "mask.kind = every_nth");
                let _ = writeln!(s, "mask.n = {n}");
            }
            MaskKind::VariableDensityLines { fraction, seed } => {
                let _ = writeln!(s, "mask.kind = variable_density_lines");
                let _ = writeln!(s, "mask.fraction = {fraction}");
                let _ = writeln!(s, "mask.seed = {seed}");
            }
            MaskKind::PoissonDisc { fraction, seed } => {
                let _ = writeln!(s, "mask.kind = poisson_disc");
                let _ = writeln!(s, "mask.fraction = {fraction}");
                let _ = writeln!(s, "mask.seed = {seed}");
            }
        }
        let _ = writeln!(s, "mask.center_band = {}", self.mask.center_band);
        if let Some(p) = &self.smaps.file {
            let _ = writeln!(s, "smaps.file = {}", p.display());
        } else {
            let _ = writeln!(s, "smaps.count = {}", self.smaps.count);
            let profile = match self.smaps.profile {
                SmapsProfile::Gaussian => "gaussian",
                SmapsProfile::Polynomial => "polynomial",
            };
            let _ = writeln!(s, "smaps.profile = {profile}");
            let _ = writeln!(s, "smaps.seed = {}", self.smaps.seed);
        }
        let _ = writeln!(s, "noise.snr_db = {}", self.snr_db);
        let _ = writeln!(s, "model.name = {}", self.model.name());
        match self.model.lambda_rule() {
            Some(LambdaRule::Auto { scale }) => {
                let _ = writeln!(s, "model.lambda = auto");
                let _ = writeln!(s, "model.lambda_scale = {scale}");
            }
            Some(LambdaRule::Fixed(v)) => {
                let _ = writeln!(s, "model.lambda = {v}");
            }
            None => {}
        }
        if let ModelSpec::EdgePreserving { delta, .. } = self.model {
            let _ = writeln!(s, "model.delta = {delta}");
        }
        if let ModelSpec::L1Synthesis { levels, .. } = self.model {
            let _ = writeln!(s, "model.levels = {levels}");
        }
        if !matches!(self.model, ModelSpec::CoilCombine | ModelSpec::SenseUnfold) {
            let names: Vec<&str> = self.solver.names.iter().map(SolverName::as_str).collect();
            let _ = writeln!(s, "solver.name = {}", names.join(", "));
            let _ = writeln!(s, "solver.iters = {}", self.solver.iters);
            if let Some(tol) = self.solver.tol {
                let _ = writeln!(s, "solver.tol = {tol}");
            }
            let _ = writeln!(s, "solver.restart = {}", self.solver.restart.as_str());
            if let Some(mu) = self.solver.mu {
                let _ = writeln!(s, "solver.mu = {mu}");
            }
            let _ = writeln!(s, "solver.inner_cg = {}", self.solver.inner_cg);
        }
        if let Some(dir) = &self.output.dir {
            let _ = writeln!(s, "output.dir = {}", dir.display());
        }
        let _ = writeln!(s, "output.pgm = {}", self.output.pgm);
        let _ = writeln!(s, "output.wall_clock = {}", self.output.wall_clock);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    /// The same configuration as nested JSON.
    pub fn to_json(&self) -> Value {
        let mut root = serde_json::Map::new();
        for line in self.to_text().lines() {
            let (key, value) = line.split_once(" = ").expect("canonical text is key = value");
            let mut cursor = &mut root;
            let parts: Vec<&str> = key.split('.').collect();
            for part in &parts[..parts.len() - 1] {
                cursor = cursor
                    .entry((*part).to_string())
                    .or_insert_with(|| Value::Object(serde_json::Map::new()))
                    .as_object_mut()
                    .expect("canonical keys never nest under scalars");
            }
            let leaf: Value = if value == "true" || value == "false" {
                json!(value == "true")
            } else if let Ok(n) = value.parse::<u64>() {
                json!(n)
            } else if let Ok(f) = value.parse::<f64>() {
                if f.is_finite() { json!(f) } else { json!(value) }
            } else {
                json!(value)
            };
            cursor.insert(parts[parts.len() - 1].to_string(), leaf);
        }
        Value::Object(root)
    }
}

/// Key-value staging area that records which keys were consumed, so strict
/// validation can name every leftover.
struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn from_list(list: Vec<(String, String)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in list {
            if map.insert(k.clone(), v).is_some() {
                return Err(HarnessError::Config(format!("duplicate key {k:?}")));
            }
        }
        Ok(Self(map))
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                HarnessError::Config(format!("{key} must be {what}, got {raw:?}"))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            return Ok(());
        }
        let mut notes = Vec::new();
        for key in self.0.keys() {
            let hint = match key.as_str() {
                "phantom.file" => " (applies only when phantom.kind = file)",
                "mask.n" => " (applies only when mask.kind = every_nth)",
                "mask.fraction" | "mask.seed" => {
                    " (applies only to variable_density_lines and poisson_disc masks)"
                }
                "smaps.count" | "smaps.profile" | "smaps.seed" => {
                    " (ignored when smaps.file is given)"
                }
                "model.lambda_scale" => " (applies only when model.lambda = auto)",
                "model.delta" => " (applies only when model.name = edge_preserving)",
                "model.levels" => " (applies only when model.name = l1_synthesis)",
                "solver.name" | "solver.iters" | "solver.tol" | "solver.restart" | "solver.mu"
                | "solver.inner_cg" => " (direct models take no solver options)",
                _ => "",
            };
            notes.push(format!("{key}{hint}"));
        }
        Err(HarnessError::Config(format!(
            "unknown or inapplicable key(s): {}",
            notes.join("; ")
        )))
    }
}

fn parse_bool(pairs: &mut Pairs, key: &str, default: bool) -> Result<bool> {
    match pairs.take(key) {
        None => Ok(default),
        Some(raw) => match raw.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(HarnessError::Config(format!("{key} must be true or false, got {raw:?}"))),
        },
    }
}

fn require_positive(key: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(HarnessError::Config(format!("{key} must be positive and finite, got {v}")));
    }
    Ok(v)
}

fn build(mut pairs: Pairs) -> Result<ExperimentConfig> {
    // Phantom.
    let kind_raw = pairs.take("phantom.kind").unwrap_or_else(|| "shepp_logan".into());
    let file = pairs.take("phantom.file");
    if file.is_some() && kind_raw != "file" {
        return Err(HarnessError::Config(
            "phantom.file applies only when phantom.kind = file".into(),
        ));
    }
    let kind = match kind_raw.as_str() {
        "shepp_logan" => PhantomKind::SheppLogan,
        "blocks" => PhantomKind::Blocks,
        "file" => PhantomKind::File(PathBuf::from(file.ok_or_else(|| {
            HarnessError::Config("phantom.kind = file needs phantom.file".into())
        })?)),
        other => {
            return Err(HarnessError::Config(format!(
                "unknown phantom kind {other:?}; expected shepp_logan, blocks, or file"
            )))
        }
    };
    let default_grid = if matches!(kind, PhantomKind::File(_)) { 0 } else { 64 };
    let phantom = PhantomSpec {
        nx: pairs.take_parsed("phantom.nx", "a whole number")?.unwrap_or(default_grid),
        ny: pairs.take_parsed("phantom.ny", "a whole number")?.unwrap_or(default_grid),
        complex: parse_bool(&mut pairs, "phantom.complex", false)?,
        kind,
    };

    // Mask.
    let mask_kind_raw = pairs.take("mask.kind").unwrap_or_else(|| "full".into());
    let mask_kind = match mask_kind_raw.as_str() {
        "full" => MaskKind::Full,
        "every_nth" => MaskKind::EveryNth(pairs.take_parsed("mask.n", "a whole number")?.unwrap_or(2)),
        "variable_density_lines" | "poisson_disc" => {
            let fraction: f64 = pairs
                .take_parsed("mask.fraction", "a number in (0, 1]")?
                .ok_or_else(|| {
                    HarnessError::Config(format!("mask.kind = {mask_kind_raw} needs mask.fraction"))
                })?;
            let seed = pairs.take_parsed("mask.seed", "a whole number")?.unwrap_or(0u64);
            if mask_kind_raw == "variable_density_lines" {
                MaskKind::VariableDensityLines { fraction, seed }
            } else {
                MaskKind::PoissonDisc { fraction, seed }
            }
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown mask kind {other:?}; expected full, every_nth, variable_density_lines, \
                 or poisson_disc"
            )))
        }
    };
    let mask = MaskSpec {
        kind: mask_kind,
        center_band: pairs.take_parsed("mask.center_band", "a whole number")?.unwrap_or(0),
    };

    // Coil maps.
    let smaps = match pairs.take("smaps.file") {
        Some(p) => SmapsSpec { file: Some(PathBuf::from(p)), ..Default::default() },
        None => {
            let profile = match pairs.take("smaps.profile").as_deref() {
                None | Some("gaussian") => SmapsProfile::Gaussian,
                Some("polynomial") => SmapsProfile::Polynomial,
                Some(other) => {
                    return Err(HarnessError::Config(format!(
                        "unknown coil profile {other:?}; expected gaussian or polynomial"
                    )))
                }
            };
            SmapsSpec {
                count: pairs.take_parsed("smaps.count", "a whole number")?.unwrap_or(4),
                profile,
                seed: pairs.take_parsed("smaps.seed", "a whole number")?.unwrap_or(0),
                file: None,
            }
        }
    };

    // Noise.
    let snr_db: f64 = pairs
        .take_parsed("noise.snr_db", "a number in dB or inf")?
        .unwrap_or(f64::INFINITY);
    if snr_db.is_nan() {
        return Err(HarnessError::Config("noise.snr_db must not be NaN".into()));
    }

    // Model.
    let lambda = match pairs.take("model.lambda") {
        None => LambdaRule::Auto { scale: pairs.take_parsed("model.lambda_scale", "a positive number")?.map_or(Ok(0.01), |v: f64| require_positive("model.lambda_scale", v))? },
        Some(raw) if raw == "auto" => LambdaRule::Auto {
            scale: pairs
                .take_parsed("model.lambda_scale", "a positive number")?
                .map_or(Ok(0.01), |v: f64| require_positive("model.lambda_scale", v))?,
        },
        Some(raw) => {
            let v: f64 = raw.parse().map_err(|_| {
                HarnessError::Config(format!("model.lambda must be auto or a number, got {raw:?}"))
            })?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(HarnessError::Config(format!(
                    "model.lambda must be nonnegative and finite, got {v}"
                )));
            }
            LambdaRule::Fixed(v)
        }
    };
    let model_name = pairs.take("model.name").unwrap_or_else(|| "quadratic".into());
    let model = match model_name.as_str() {
        "coil_combine" | "sense_unfold" => {
            if !matches!(lambda, LambdaRule::Auto { scale } if scale == 0.01) {
                return Err(HarnessError::Config(format!(
                    "model.lambda and model.lambda_scale do not apply to the direct model {model_name}"
                )));
            }
            if model_name == "coil_combine" { ModelSpec::CoilCombine } else { ModelSpec::SenseUnfold }
        }
        "quadratic" => ModelSpec::Quadratic { lambda },
        "edge_preserving" => ModelSpec::EdgePreserving {
            lambda,
            delta: pairs
                .take_parsed("model.delta", "a positive number")?
                .map_or(Ok(0.1), |v: f64| require_positive("model.delta", v))?,
        },
        "l1_synthesis" => ModelSpec::L1Synthesis {
            lambda,
            levels: match pairs.take_parsed("model.levels", "a whole number of at least 1")? {
                None => 2,
                Some(0) => {
                    return Err(HarnessError::Config("model.levels must be at least 1".into()))
                }
                Some(l) => l,
            },
        },
        "tv" => ModelSpec::Tv { lambda },
        other => {
            return Err(HarnessError::Config(format!(
                "unknown model {other:?}; expected coil_combine, sense_unfold, quadratic, \
                 edge_preserving, l1_synthesis, or tv"
            )))
        }
    };

    // Solvers.
    let solver = if matches!(model, ModelSpec::CoilCombine | ModelSpec::SenseUnfold) {
        SolverSpec::default()
    } else {
        let names = match pairs.take("solver.name") {
            None => SolverSpec::default().names,
            Some(raw) => {
                let names: Vec<SolverName> = raw
                    .split(',')
                    .map(|p| SolverName::parse(p.trim()))
                    .collect::<Result<_>>()?;
                if names.is_empty() {
                    return Err(HarnessError::Config("solver.name must list at least one solver".into()));
                }
                let mut seen = Vec::new();
                for n in &names {
                    if seen.contains(n) {
                        return Err(HarnessError::Config(format!(
                            "solver {} listed twice",
                            n.as_str()
                        )));
                    }
                    seen.push(*n);
                }
                names
            }
        };
        let restart = match pairs.take("solver.restart").as_deref() {
            None | Some("off") => RestartRule::Off,
            Some("function_value") => RestartRule::FunctionValue,
            Some("gradient_angle") => RestartRule::GradientAngle,
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "unknown restart rule {other:?}; expected off, function_value, or gradient_angle"
                )))
            }
        };
        SolverSpec {
            names,
            iters: pairs.take_parsed("solver.iters", "a whole number")?.unwrap_or(50),
            tol: pairs
                .take_parsed("solver.tol", "a positive number")?
                .map(|v: f64| require_positive("solver.tol", v))
                .transpose()?,
            restart,
            mu: pairs
                .take_parsed("solver.mu", "a positive number")?
                .map(|v: f64| require_positive("solver.mu", v))
                .transpose()?,
            inner_cg: match pairs.take_parsed("solver.inner_cg", "a whole number of at least 1")? {
                None => 4,
                Some(0) => return Err(HarnessError::Config("solver.inner_cg must be at least 1".into())),
                Some(k) => k,
            },
        }
    };

    // Output and seed.
    let output = OutputSpec {
        dir: pairs.take("output.dir").map(PathBuf::from),
        pgm: parse_bool(&mut pairs, "output.pgm", true)?,
        wall_clock: parse_bool(&mut pairs, "output.wall_clock", false)?,
    };
    let seed = pairs.take_parsed("seed", "a whole number")?.unwrap_or(0u64);

    pairs.finish()?;
    Ok(ExperimentConfig { phantom, mask, smaps, snr_db, model, solver, output, seed })
}

fn pairs_from_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("line {}: expected `key = value`, got {line:?}", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(HarnessError::Config(format!(
                "line {}: empty key or value in {line:?}",
                lineno + 1
            )));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

fn flatten_json(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) -> Result<()> {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, child, out)?;
            }
            Ok(())
        }
        Value::Array(items) => {
            let mut parts = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    Value::String(s) => parts.push(s.clone()),
                    Value::Number(n) => parts.push(n.to_string()),
                    Value::Bool(b) => parts.push(b.to_string()),
                    _ => {
                        return Err(HarnessError::Config(format!(
                            "{prefix}: JSON arrays may hold only scalars"
                        )))
                    }
                }
            }
            out.push((prefix.to_string(), parts.join(", ")));
            Ok(())
        }
        Value::String(s) => {
            out.push((prefix.to_string(), s.clone()));
            Ok(())
        }
        Value::Number(n) => {
            out.push((prefix.to_string(), n.to_string()));
            Ok(())
        }
        Value::Bool(b) => {
            out.push((prefix.to_string(), b.to_string()));
            Ok(())
        }
        Value::Null => Ok(()),
    }
}

/// Parses a configuration from either representation: JSON when the first
/// non-whitespace byte is `{`, the flat `key = value` text otherwise.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let pairs = if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| HarnessError::Config(format!("invalid JSON configuration: {e}")))?;
        if !v.is_object() {
            return Err(HarnessError::Config("the JSON configuration must be an object".into()));
        }
        let mut out = Vec::new();
        flatten_json("", &v, &mut out)?;
        out
    } else {
        pairs_from_text(text)?
    };
    build(Pairs::from_list(pairs)?)
}

/// Loads a configuration file and resolves its relative paths (phantom
/// file, coil-map file, output directory) against the file's directory.
pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let mut cfg = parse_config(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&p);
        }
    };
    if let PhantomKind::File(p) = &mut cfg.phantom.kind {
        resolve(p);
    }
    if let Some(p) = &mut cfg.smaps.file {
        resolve(p);
    }
    if let Some(p) = &mut cfg.output.dir {
        resolve(p);
    }
    Ok(cfg)
}
