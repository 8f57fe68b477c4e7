//! Library side of the `droplet-fall` command-line tool: configuration,
//! run pipelines, figure presets, sweeps and output files.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::{parse_config, ConfigError, RunConfig};
pub use presets::{run_preset, PRESETS};
pub use run::{run_command, CliError, Command};
pub use sweep::{run_sweep, Axis};

/// Environment variable capping worker threads (0 or unset: one per core).
pub const THREADS_ENV: &str = "DROPLET_FALL_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`].
pub fn init_thread_pool() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| ConfigError::Invalid {
        path: THREADS_ENV.into(),
        message: format!("expected a non-negative integer, got '{raw}'"),
    })?;
    if n > 0 {
        // a pool may already exist when embedded; keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
