//! Command implementations behind the `stopgame` binary.

pub mod commands;
pub mod error;
pub mod spec;
pub mod stats;

pub use error::{CliError, CliResult};
pub use spec::{Experiment, ExperimentSpec};

/// Sizes the global worker pool from `STOPGAME_THREADS` when it is set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("STOPGAME_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Input(format!("STOPGAME_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}
