//! Cartesian-product parameter sweeps. Each combination runs in its own
//! output directory; `sweep.json` indexes them once all have finished.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_config, ConfigError};
use crate::output::OutputDir;
use crate::run::{run_command, CliError, Command};

/// One swept key and its values, parsed from `key=[v1,v2,...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<Value>,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Self, ConfigError> {
        let (key, list) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
        let values: Vec<Value> = serde_json::from_str(list.trim()).map_err(|_| ConfigError::Invalid {
            path: key.trim().to_string(),
            message: format!("sweep values must be a JSON array, got '{list}'"),
        })?;
        if values.is_empty() {
            return Err(ConfigError::Invalid {
                path: key.trim().to_string(),
                message: "sweep axis is empty".into(),
            });
        }
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// All combinations as override lists, first axis varying slowest.
pub fn combinations(axes: &[Axis]) -> Vec<Vec<String>> {
    let mut combos = vec![Vec::new()];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(format!("{}={}", axis.key, v));
                    c
                })
            })
            .collect();
    }
    combos
}

/// Runs `cmd` for every combination; `base_text` and `overrides` are applied
/// before the swept keys. Returns the sweep index.
pub fn run_sweep(
    cmd: Command,
    base_text: &str,
    overrides: &[String],
    axes: &[Axis],
    out_dir: &Path,
) -> Result<Value, CliError> {
    let combos = combinations(axes);
    let configs = combos
        .iter()
        .enumerate()
        .map(|(i, combo)| {
            let mut all = overrides.to_vec();
            all.extend(combo.iter().cloned());
            all.push(format!("output_dir={}", serde_json::to_string(&out_dir.join(format!("run_{i:03}")).to_string_lossy()).expect("path string")));
            parse_config(base_text, &all)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let index = OutputDir::create(out_dir)?;
    let results: Vec<Result<Value, CliError>> = configs.par_iter().map(|cfg| run_command(cmd, cfg, false)).collect();
    let mut runs = Vec::new();
    let mut first_error = None;
    for (i, (combo, result)) in combos.iter().zip(results).enumerate() {
        let status = match result {
            Ok(_) => json!("ok"),
            Err(e) => {
                let s = json!({ "error": e.to_string(), "exit_code": e.exit_code() });
                first_error.get_or_insert(e);
                s
            }
        };
        runs.push(json!({ "dir": format!("run_{i:03}"), "overrides": combo, "status": status }));
    }
    let manifest = json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "command": "sweep",
        "subcommand": cmd.name(),
        "axes": axes.iter().map(|a| json!({ "key": a.key, "values": a.values })).collect::<Vec<_>>(),
        "runs": runs,
    });
    index.write(
        "sweep.json",
        serde_json::to_string_pretty(&manifest).expect("index serializes").as_bytes(),
    )?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
