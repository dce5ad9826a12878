//! Monte Carlo experiment harness: declarative experiment configs, a
//! parallel trial engine with reproducible per-trial RNG streams, CSV
//! summaries with plot-script emission, and the command-line front end.
//!
//! The flow is always config → [`run_experiment`] → [`SummaryRow`]s →
//! [`write_results`]. Baseline detectors get their thresholds calibrated
//! from a dedicated null-hypothesis run before any measurement; the
//! eigenvalue detector keeps its closed-form threshold throughout.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;

pub use cli::cli_main;
pub use config::{ChannelSpec, ConfigError, ExperimentConfig, ExperimentKind};
pub use output::{emit_plot_script, render_csv, write_results};
pub use run::{empirical_quantile, run_experiment, run_experiment_on, trial_rng, SummaryRow};

use crate::analysis::AnalysisError;
use crate::channel::ChannelError;
use crate::detectors::{DetectorError, DetectorId};
use crate::signals::SignalError;
use std::fmt;
use std::path::PathBuf;

/// Any failure of an experiment run, from config rejection through
/// filesystem trouble to an aborted measurement pass.
#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Signal(SignalError),
    Channel(ChannelError),
    Detector(DetectorError),
    Analysis(AnalysisError),
    ThreadPool {
        reason: String,
    },
    /// More than one per mille of a pass's trials failed; the measurement
    /// is untrustworthy, so the run stops instead of reporting it.
    TooManyTrialErrors {
        detector: DetectorId,
        sweep_value: f64,
        errors: u64,
        trials: u64,
        first: String,
    },
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Io { path, source } => {
                write!(f, "i/o failure on {}: {source}", path.display())
            }
            HarnessError::Signal(e) => write!(f, "signal synthesis: {e}"),
            HarnessError::Channel(e) => write!(f, "channel model: {e}"),
            HarnessError::Detector(e) => write!(f, "detector: {e}"),
            HarnessError::Analysis(e) => write!(f, "performance model: {e}"),
            HarnessError::ThreadPool { reason } => {
                write!(f, "cannot build worker pool: {reason}")
            }
            HarnessError::TooManyTrialErrors {
                detector,
                sweep_value,
                errors,
                trials,
                first,
            } => write!(
                f,
                "{} failed on {errors} of {trials} trials at sweep point {sweep_value} \
                 (first failure: {first})",
                detector.as_str()
            ),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Config(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            HarnessError::Signal(e) => Some(e),
            HarnessError::Channel(e) => Some(e),
            HarnessError::Detector(e) => Some(e),
            HarnessError::Analysis(e) => Some(e),
            _ => None,
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<SignalError> for HarnessError {
    fn from(e: SignalError) -> Self {
        HarnessError::Signal(e)
    }
}

impl From<ChannelError> for HarnessError {
    fn from(e: ChannelError) -> Self {
        HarnessError::Channel(e)
    }
}

impl From<DetectorError> for HarnessError {
    fn from(e: DetectorError) -> Self {
        HarnessError::Detector(e)
    }
}

impl From<AnalysisError> for HarnessError {
    fn from(e: AnalysisError) -> Self {
        HarnessError::Analysis(e)
    }
}

impl HarnessError {
    /// Process exit code under the CLI convention: 2 for configuration
    /// problems, 1 for anything that failed at runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
