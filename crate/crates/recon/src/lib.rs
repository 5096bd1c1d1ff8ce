//! Experiment harness for Cartesian parallel MRI reconstruction: phantoms,
//! sampling masks, coil maps, noise simulation, solver dispatch, file
//! formats, and named presets — everything the `recon` command line drives.
//! All randomness is seeded and every artifact is written deterministically,
//! so identical configurations produce byte-identical outputs.

pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod mask;
pub mod metrics;
pub mod phantom;
pub mod presets;
pub mod sim;
pub mod smaps;

pub use config::{
    load_config_file, parse_config, ExperimentConfig, LambdaRule, ModelSpec, OutputSpec,
    RestartRule, SolverName, SolverSpec,
};
pub use error::{HarnessError, Result};
pub use experiment::{
    assemble, run_experiment, simulate_experiment, solve_all, Assembled, RunSummary, SolverRun,
    SolverSummary,
};
pub use mask::{make_mask, MaskKind, MaskSpec};
pub use metrics::nrmse;
pub use phantom::{make_phantom, PhantomKind, PhantomSpec};
pub use presets::{preset, preset_file_text, PRESET_NAMES};
pub use sim::{empirical_snr_db, simulate};
pub use smaps::{make_smaps, SmapsProfile, SmapsSpec};
