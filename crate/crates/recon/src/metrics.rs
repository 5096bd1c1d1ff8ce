//! Image-quality metric: normalized root mean squared error over complex
//! values, `‖x − ref‖ / ‖ref‖`.

use recon_core::{vec, Image64};

use crate::error::{HarnessError, Result};

/// Relative Euclidean error of `x` against `reference`.
///
/// Errors on mismatched grids and on a zero reference (the ratio would be
/// undefined).
pub fn nrmse(x: &Image64, reference: &Image64) -> Result<f64> {
    if x.nx() != reference.nx() || x.ny() != reference.ny() {
        return Err(HarnessError::Config(format!(
            "cannot compare a {}x{} image against a {}x{} reference",
            x.nx(),
            x.ny(),
            reference.nx(),
            reference.ny()
        )));
    }
    if vec::norm_sq(reference.data()) == 0.0 {
        return Err(HarnessError::Config("the error metric needs a nonzero reference image".into()));
    }
    Ok(vec::nrmse(x.data(), reference.data()))
}
