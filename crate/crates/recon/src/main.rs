//! The `recon` command line: simulate datasets, run reconstruction
//! experiments, materialize presets, and describe files. All file artifacts
//! are deterministic; wall-clock timing is printed here and never written.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use recon::config::ExperimentConfig;
use recon::error::{HarnessError, Result};
use recon::experiment::{run_experiment, simulate_experiment, RunSummary};
use recon::{formats, load_config_file, preset, preset_file_text};

#[derive(Parser)]
#[command(
    name = "recon",
    version,
    about = "Cartesian parallel MRI reconstruction experiments",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a dataset (truth, mask, coil maps, k-space) without solving.
    Simulate {
        /// Configuration file, flat `key = value` text or JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the configuration's output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configuration's noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the experiment a configuration describes.
    Run {
        /// Configuration file, flat `key = value` text or JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the configuration's output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configuration's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the solver iteration budget.
        #[arg(long)]
        iters: Option<usize>,
        /// Override the penalty weight with a fixed value.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Write a named preset's configuration into a directory and run it.
    Preset {
        /// One of: fig-ep, fig-odwt, quad, full.
        name: String,
        /// Directory that receives config.txt and all run artifacts.
        #[arg(long)]
        out: PathBuf,
        /// Override the preset's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the preset's iteration budget.
        #[arg(long)]
        iters: Option<usize>,
        /// Override the preset's penalty weight with a fixed value.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Identify a file: data formats are described, configurations echoed
    /// back in canonical form.
    Info {
        file: PathBuf,
    },
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    seed: Option<u64>,
    iters: Option<usize>,
    lambda: Option<f64>,
) -> Result<()> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(i) = iters {
        cfg.solver.iters = i;
    }
    if let Some(l) = lambda {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(HarnessError::Config(format!(
                "--lambda must be nonnegative and finite, got {l}"
            )));
        }
        match cfg.model.lambda_rule_mut() {
            Some(rule) => *rule = recon::LambdaRule::Fixed(l),
            None => {
                return Err(HarnessError::Config(format!(
                    "the {} model has no penalty weight to override",
                    cfg.model.name()
                )))
            }
        }
    }
    Ok(())
}

fn resolve_out(cli_out: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    cli_out.or_else(|| cfg.output.dir.clone()).ok_or_else(|| {
        HarnessError::Config("no output directory: pass --out or set output.dir".into())
    })
}

fn print_summary(s: &RunSummary, elapsed: f64) {
    println!("wrote {}", s.out_dir.display());
    println!("sampling fraction: {:.4} realized", s.realized_fraction);
    if let Some(f) = s.requested_fraction {
        println!("                   {f:.4} requested");
    }
    if let Some(l) = s.lambda {
        println!("penalty weight:    {l:.6e}");
    }
    for sv in &s.solvers {
        println!(
            "{}: cost {:.6e}, relative error {:.4e}, {} iterations",
            sv.name, sv.final_cost, sv.final_nrmse, sv.iterations
        );
    }
    for note in &s.notes {
        println!("note: {note}");
    }
    println!("elapsed: {elapsed:.2} s");
}

fn cmd_info(path: &Path) -> Result<()> {
    if let Some(desc) = formats::describe_data_file(path)? {
        println!("{desc}");
        return Ok(());
    }
    let cfg = load_config_file(path).map_err(|e| {
        HarnessError::Config(format!(
            "{}: not a recognized data file, and not a valid configuration ({e})",
            path.display()
        ))
    })?;
    println!("configuration for a {} experiment:", cfg.model.name());
    print!("{}", cfg.to_text());
    Ok(())
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { config, out, seed } => {
            let mut cfg = load_config_file(&config)?;
            apply_overrides(&mut cfg, seed, None, None)?;
            let dir = resolve_out(out, &cfg)?;
            let start = Instant::now();
            let summary = simulate_experiment(&cfg, &dir)?;
            print_summary(&summary, start.elapsed().as_secs_f64());
            Ok(())
        }
        Cmd::Run { config, out, seed, iters, lambda } => {
            let mut cfg = load_config_file(&config)?;
            apply_overrides(&mut cfg, seed, iters, lambda)?;
            let dir = resolve_out(out, &cfg)?;
            let start = Instant::now();
            let summary = run_experiment(&cfg, &dir)?;
            print_summary(&summary, start.elapsed().as_secs_f64());
            Ok(())
        }
        Cmd::Preset { name, out, seed, iters, lambda } => {
            let (mut cfg, comment) = preset(&name)?;
            apply_overrides(&mut cfg, seed, iters, lambda)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| HarnessError::Run(format!("cannot create {}: {e}", out.display())))?;
            let cfg_path = out.join("config.txt");
            std::fs::write(&cfg_path, preset_file_text(&cfg, comment))
                .map_err(|e| HarnessError::Run(format!("cannot write {}: {e}", cfg_path.display())))?;
            let start = Instant::now();
            let summary = run_experiment(&cfg, &out)?;
            print_summary(&summary, start.elapsed().as_secs_f64());
            Ok(())
        }
        Cmd::Info { file } => cmd_info(&file),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = real_main(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
