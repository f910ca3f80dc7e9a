//! Batch front end for `hgram`: dataset generation, meta-training,
//! evaluation, sweeps, ablations and bound verification.
//!
//! Every command reads one [`RunConfig`], writes its resolved form to
//! `effective_config.toml` in the output directory, and is deterministic
//! given that file and the seed list.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

pub use config::{DatasetKind, DatasetSpec, RunConfig, SweepAxis, SweepConfig, EFFECTIVE_CONFIG};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "HGRAM_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hgram::Error),
    #[error("{0} bound violation(s) found")]
    Violation(usize),
}

impl CliError {
    /// Process exit code: 1 for configuration, input and I/O problems,
    /// 2 for numerical failures, 3 for bound violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(hgram::Error::NumericalFailure(_)) => EXIT_NUMERICAL,
            CliError::Violation(_) => EXIT_VIOLATION,
            _ => EXIT_VALIDATION,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// A validated configuration bound to its output directory.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub config: RunConfig,
    pub out: PathBuf,
}

/// Merges the config file with command-line overrides. The output
/// directory is `--out`, else the config's `out`, else `<$HGRAM_OUT>/<command>`,
/// else `runs/<command>`.
pub fn resolve(
    command: &str,
    config: Option<&Path>,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
    env_out: Option<PathBuf>,
) -> Result<Invocation, CliError> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seeds {
        // For `generate` the seed is the generator's.
        if command == "generate" {
            if s.len() != 1 {
                return Err(CliError::Config(format!(
                    "generate takes exactly one seed, got {}",
                    s.len()
                )));
            }
            cfg.dataset.set_generator_seed(s[0]);
        }
        cfg.seeds = s;
    }
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| {
        env_out
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(command)
    });
    cfg.out = Some(out.clone());
    cfg.validate()?;
    Ok(Invocation { config: cfg, out })
}
