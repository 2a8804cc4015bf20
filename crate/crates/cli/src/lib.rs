//! Batch front end for `pilotwave`: configuration, execution and output
//! files. The `pilotwave` binary is a thin wrapper over this crate.

pub mod config;
pub mod output;
pub mod runner;

use std::path::PathBuf;

pub use config::{Check, ConfigError, Initial, Plan, RunConfig};
pub use runner::{execute, Outcome, Report};

/// Environment variable that fixes the number of worker threads.
pub const WORKERS_ENV: &str = "PILOTWAVE_WORKERS";

/// Exit status for a run whose checks all passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status when a requested check failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for usage and configuration errors.
pub const EXIT_CONFIG: i32 = 2;

/// One line per scenario: name, then `key=value` defaults.
pub fn list_scenarios() -> String {
    let mut out = String::new();
    for name in pilotwave::scenarios::NAMES {
        let params = config::scenario_parameters(name).expect("listed scenario");
        let defaults = pilotwave::scenarios::by_name(name).expect("defaults are valid").defaults;
        out.push_str(name);
        for (k, v) in params {
            out.push_str(&format!(" {k}={v}"));
        }
        out.push_str(&format!(
            " dt={} nsteps={} stride={} n={}\n",
            defaults.dt, defaults.nsteps, defaults.stride, defaults.n_samples
        ));
    }
    out
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ConfigError(format!("{WORKERS_ENV} must be an integer >= 1, got `{v}`"))),
        },
    }
}

/// Resolves, runs and writes. Returns the written files and whether every
/// check passed; configuration problems surface before any file is touched.
pub fn run(config: &RunConfig) -> Result<(Vec<PathBuf>, bool), Box<dyn std::error::Error>> {
    let plan = config.resolve()?;
    let outcome = execute(&plan).map_err(|e| ConfigError(e.to_string()))?;
    let files = output::write_all(&plan.output_dir, &outcome)?;
    Ok((files, outcome.report.pass))
}
