//! Operators, regularizers, and iterative solvers for Cartesian parallel MRI
//! reconstruction.

pub mod adaptive;
pub mod error;
pub mod fft;
pub mod linalg;
pub mod model;
pub mod momentum;
pub mod num;
pub mod patch;
pub mod potential;
pub mod prox;
pub mod smooth;
pub mod split;
pub mod trace;
pub mod transform;
pub mod types;
pub mod vec;

pub use crate::adaptive::{
    analysis_alternate, dlmri, sparse_code_analysis, sparse_code_synthesis, tlmri, Dictionary,
    SparseCodes, TransformModel,
};
pub use crate::error::{ReconError, Result};
pub use crate::model::{coil_combine, sense_block_solve, FftConvention, SystemOperator};
pub use crate::momentum::Restart;
pub use crate::num::{Cplx, Scalar};
pub use crate::smooth::{cg_quadratic, gradient_descent, ncg, ogm, Precond, SmoothCost, SolveOpts};
pub use crate::split::{admm_analysis, admm_structured, condition_penalties, primal_dual};
pub use crate::patch::{aggregate_patches, extract_patches, patch_gram_diag, PatchConfig};
pub use crate::potential::{soft_threshold, Potential};
pub use crate::prox::{fista, ista, pgm_general, pogm, select_majorizer, CompositeCost, Majorizer, ProxOpts};
pub use crate::trace::{SolverTrace, TraceRecord};
pub use crate::transform::{huber_split_value, Transform, TransformKind};
pub use crate::types::{Image, KSpaceData, SamplingMask, SensitivityMaps};

/// Double-precision aliases (the default working precision).
pub type Image64 = Image<f64>;
pub type KSpaceData64 = KSpaceData<f64>;
pub type SensitivityMaps64 = SensitivityMaps<f64>;
pub type SystemOperator64 = SystemOperator<f64>;

/// Single-precision aliases (reduced-precision runs).
pub type Image32 = Image<f32>;
pub type KSpaceData32 = KSpaceData<f32>;
pub type SensitivityMaps32 = SensitivityMaps<f32>;
pub type SystemOperator32 = SystemOperator<f32>;
