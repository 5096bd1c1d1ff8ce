//! Harness failures, split by pipeline stage so the command-line front end
//! can map them onto its exit-code contract.

use recon_core::ReconError;

/// Everything that can go wrong while preparing or running an experiment.
///
/// `Config` covers the configuration file itself plus any setup it describes
/// (phantom/mask/map construction, input files, model–solver pairing) and
/// maps to exit code 2. `Run` covers failures after setup — solver errors
/// and output I/O — and maps to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failure: {0}")]
    Run(String),
}

impl HarnessError {
    /// Process exit status for the CLI: 2 for configuration problems,
    /// 3 for run-time failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Run(_) => 3,
        }
    }
}

impl From<ReconError> for HarnessError {
    fn from(e: ReconError) -> Self {
        match e {
            ReconError::Dimension(_) | ReconError::Config(_) | ReconError::Unsupported(_) => {
                Self::Config(e.to_string())
            }
            ReconError::Solver(_) | ReconError::Invariant(_) => Self::Run(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Context-carrying wrapper for I/O on files the user handed us (inputs).
pub(crate) fn read_err(path: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("cannot read {}: {e}", path.display()))
}

/// Context-carrying wrapper for I/O on files we produce (outputs).
pub(crate) fn write_err(path: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Run(format!("cannot write {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_cli_contract() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::Run("x".into()).exit_code(), 3);
    }

    #[test]
    fn core_errors_are_classified_by_stage() {
        let setup: HarnessError = ReconError::Dimension("bad".into()).into();
        assert_eq!(setup.exit_code(), 2);
        let setup: HarnessError = ReconError::Unsupported("bad".into()).into();
        assert_eq!(setup.exit_code(), 2);
        let run: HarnessError = ReconError::Solver("bad".into()).into();
        assert_eq!(run.exit_code(), 3);
        let run: HarnessError = ReconError::Invariant("bad".into()).into();
        assert_eq!(run.exit_code(), 3);
    }
}
