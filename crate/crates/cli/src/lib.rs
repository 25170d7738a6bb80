//! Experiment runner behind the `udmetric` binary.
//!
//! A run reads one JSON config, validates all of it up front, computes in
//! memory, then writes CSV/JSON outputs next to a `manifest.json` that is
//! created first (status `running`) and finalized last.

use std::fmt;

use udmetric::ErrorClass;

pub mod config;
pub mod run;

pub use config::{parse_config, parse_value, ExperimentConfig, ExperimentKind, Overrides};
pub use run::{run, RunManifest, RunOptions, RunStatus};

/// Variable naming the output directory when neither `--out` nor the config sets one.
pub const OUT_ENV: &str = "UDMETRIC_OUT";
pub const DEFAULT_OUT: &str = "udmetric-out";

pub const EXIT_OK: i32 = 0;
/// A module reported a failure that is neither bad input nor a guard.
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Every problem found in the config.
    Validation(Vec<String>),
    Module {
        module: &'static str,
        err: udmetric::Error,
    },
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
            CliError::Module { err, .. } => match err.class() {
                ErrorClass::Validation => EXIT_VALIDATION,
                ErrorClass::Guard => EXIT_GUARD,
                ErrorClass::Io => EXIT_IO,
                ErrorClass::Computation => EXIT_COMPUTATION,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(errs) => {
                write!(
                    f,
                    "invalid config ({} problem{}):",
                    errs.len(),
                    if errs.len() == 1 { "" } else { "s" }
                )?;
                for e in errs {
                    write!(f, "\n  - {e}")?;
                }
                Ok(())
            }
            CliError::Module { module, err } => write!(f, "{module}: {err}"),
            CliError::Io(msg) => write!(f, "i/o: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
