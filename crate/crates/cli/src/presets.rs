//! Figure presets: fixed parameter sets run through the analytic and numeric
//! pipelines. Every preset writes into one directory with one manifest.

use std::time::Instant;

use droplet_core::full_wavefunction;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{NoiseConfig, RunConfig, Variant};
use crate::output::{self, label, OutputDir};
use crate::run::{dispatch, entropy_variant, CliError, Command};

pub const PRESETS: [&str; 10] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

/// Analytic grid large enough for the longest falls in the presets.
const WIDE_GRID: usize = 32768;
const MEDIUM_GRID: usize = 8192;
const SMALL_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Run(Command),
    /// Analytic series plus a space-time density map over `[x_lo, x_hi]`,
    /// keeping every `stride`-th grid node.
    DensityMap { x_lo: f64, x_hi: f64, stride: usize },
}

#[derive(Debug, Clone)]
pub struct PresetStep {
    pub label: String,
    pub step: Step,
    pub cfg: RunConfig,
}

/// Caption parameter set: `μ = μ0` with unit quadratic coupling and
/// `G2 = 0.9999`, released at rest from the origin.
pub fn caption_config(user: &RunConfig) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.droplet.mu_ratio = Some(1.0);
    cfg.grid.n_points = WIDE_GRID;
    cfg.diagnostics.snapshot_times = Vec::new();
    cfg.output_dir = user.output_dir.clone();
    cfg.seed = user.seed;
    cfg
}

fn with_trap(mut cfg: RunConfig, a: f64, modulation: Option<(f64, f64)>) -> RunConfig {
    cfg.potential = Default::default();
    match modulation {
        Some((alpha, omega)) if alpha != 0.0 => {
            cfg.potential.variant = Variant::Modulated;
            cfg.potential.a = Some(a);
            cfg.potential.alpha = Some(alpha);
            cfg.potential.omega = Some(omega);
        }
        _ if a == 0.0 => {}
        _ => {
            cfg.potential.variant = Variant::Constant;
            cfg.potential.a = Some(a);
        }
    }
    cfg.resolved()
}

fn with_norm(mut cfg: RunConfig, n: f64) -> RunConfig {
    cfg.droplet.mu_ratio = None;
    cfg.droplet.norm = Some(n);
    cfg
}

fn series(mut cfg: RunConfig, t_end: f64, dt: f64) -> RunConfig {
    cfg.diagnostics.series.t_end = t_end;
    cfg.diagnostics.series.dt = dt;
    cfg
}

fn grid(mut cfg: RunConfig, n: usize) -> RunConfig {
    cfg.grid.n_points = n;
    cfg
}

fn step(label: String, step: Step, cfg: RunConfig) -> PresetStep {
    PresetStep { label, step, cfg }
}

/// Steps of a preset, in output order.
pub fn preset_steps(name: &str, user: &RunConfig) -> Result<Vec<PresetStep>, CliError> {
    let base = caption_config(user);
    let mut steps = Vec::new();
    match name {
        "fig1" => {
            for a in [0.0, 9.8, 0.98, 0.098] {
                let mut cfg = series(grid(with_trap(base.clone(), a, None), SMALL_GRID), 1.0, 0.05);
                cfg.diagnostics.snapshot_times = vec![1.0];
                steps.push(step(format!("a{}", label(a)), Step::Run(Command::Analytic), cfg));
            }
        }
        "fig2" => {
            for a in [0.0, 0.098, 0.54, 0.98, 4.9, 9.8] {
                let cfg = series(grid(with_trap(base.clone(), a, None), MEDIUM_GRID), 5.0, 0.05);
                let map = Step::DensityMap {
                    x_lo: -20.0,
                    x_hi: 140.0,
                    stride: 4,
                };
                steps.push(step(format!("a{}", label(a)), map, cfg));
            }
        }
        "fig3" => {
            for g2 in [0.9, 0.999, 0.9999, 0.999999] {
                let mut cfg = series(grid(with_trap(base.clone(), 0.098, None), MEDIUM_GRID), 20.0, 0.1);
                cfg.droplet.g2 = g2;
                let map = Step::DensityMap {
                    x_lo: -40.0,
                    x_hi: 60.0,
                    stride: 2,
                };
                steps.push(step(format!("g2_{}", label(g2)), map, cfg));
            }
        }
        "fig4" => {
            for n in [1.0, 3.0, 5.0] {
                let mut cfg = series(grid(with_norm(with_trap(base.clone(), 0.98, None), n), MEDIUM_GRID), 12.0, 0.02);
                cfg.diagnostics.probes = vec![20.0];
                cfg.diagnostics.snapshot_times = vec![7.0];
                steps.push(step(format!("a_n{}", label(n)), Step::Run(Command::Analytic), cfg));
            }
            for (a, t_end) in [(9.8, 4.0), (0.98, 12.0), (0.098, 40.0)] {
                let mut cfg = series(grid(with_norm(with_trap(base.clone(), a, None), 5.0), MEDIUM_GRID), t_end, 0.02);
                cfg.diagnostics.probes = vec![20.0];
                steps.push(step(format!("c_a{}", label(a)), Step::Run(Command::Analytic), cfg));
            }
        }
        "fig5" => {
            for alpha in [0.1, 0.2, 0.3] {
                for n in [1.0, 3.0, 5.0] {
                    let trap = with_trap(base.clone(), 0.98, Some((alpha, 0.5)));
                    let mut cfg = series(grid(with_norm(trap, n), MEDIUM_GRID), 12.0, 0.02);
                    cfg.diagnostics.probes = vec![20.0];
                    steps.push(step(format!("a_alpha{}_n{}", label(alpha), label(n)), Step::Run(Command::Analytic), cfg));
                }
            }
            for omega in [0.5, 0.55, 0.6] {
                for n in [1.0, 3.0, 5.0] {
                    let trap = with_trap(base.clone(), 9.8, Some((0.3, omega)));
                    let mut cfg = series(grid(with_norm(trap, n), MEDIUM_GRID), 4.0, 0.01);
                    cfg.diagnostics.probes = vec![20.0];
                    steps.push(step(format!("b_omega{}_n{}", label(omega), label(n)), Step::Run(Command::Analytic), cfg));
                }
            }
        }
        "fig6" => {
            for alpha in [0.0, 20.0, -20.0] {
                let mut cfg = series(grid(with_trap(base.clone(), 0.98, Some((alpha, 1.0))), MEDIUM_GRID), 15.0, 0.02);
                cfg.diagnostics.probes = vec![50.0];
                steps.push(step(format!("a_alpha{}", label(alpha)), Step::Run(Command::Analytic), cfg));
            }
            for (panel, alpha) in [("b", 20.0), ("c", -20.0)] {
                let cfg = series(grid(with_trap(base.clone(), 0.098, Some((alpha, 1.0))), MEDIUM_GRID), 20.0, 0.1);
                let map = Step::DensityMap {
                    x_lo: -20.0,
                    x_hi: 40.0,
                    stride: 2,
                };
                steps.push(step(format!("{panel}_alpha{}", label(alpha)), map, cfg));
            }
        }
        "fig7" | "fig8" => {
            let cases: Vec<(f64, f64)> = if name == "fig7" {
                [0.0, 0.1, 0.2, 0.3].iter().map(|&a| (a, 0.5)).collect()
            } else {
                [1.0, 5.0, 10.0].iter().map(|&w| (0.3, w)).collect()
            };
            for (alpha, omega) in cases {
                let mut cfg = grid(with_trap(base.clone(), 9.8, Some((alpha, omega))), SMALL_GRID);
                cfg.diagnostics.wigner.time = 1.0;
                cfg.diagnostics.wigner.half_width = 6.0;
                cfg.diagnostics.wigner.n_p = 256;
                let tag = if name == "fig7" {
                    format!("alpha{}", label(alpha))
                } else {
                    format!("omega{}", label(omega))
                };
                steps.push(step(tag, Step::Run(Command::Wigner), cfg));
            }
        }
        "fig9" => {
            let mut entropy = |tag: String, a: f64, modulation: Option<(f64, f64)>, t_end: f64| {
                let mut cfg = series(with_trap(base.clone(), a, modulation), t_end, 0.05);
                cfg.diagnostics.entropy.window_min = Some(20.0);
                steps.push(step(tag, Step::Run(Command::Entropy), cfg));
            };
            for (a, t_end) in [(9.8, 12.0), (0.98, 36.0), (0.098, 40.0)] {
                entropy(format!("a_a{}", label(a)), a, None, t_end);
            }
            for alpha in [0.0, 0.3] {
                entropy(format!("b_alpha{}", label(alpha)), 9.8, Some((alpha, 0.5)), 12.0);
            }
            for alpha in [0.1, 0.2, 0.3] {
                entropy(format!("c_alpha{}", label(alpha)), 9.8, Some((alpha, 0.5)), 12.0);
            }
            for omega in [0.5, 0.55, 0.6] {
                entropy(format!("d_omega{}", label(omega)), 9.8, Some((0.3, omega)), 12.0);
            }
        }
        "fig10" => {
            for (tag, modulation) in [("constant", None), ("modulated", Some((0.3, 0.5)))] {
                let mut cfg = grid(with_norm(with_trap(base.clone(), 9.8, modulation), 1.0), SMALL_GRID);
                cfg.evolution.dt = 1e-4;
                cfg.evolution.n_steps = 10_000;
                cfg.evolution.record_every = 100;
                cfg.noise = Some(NoiseConfig::default());
                steps.push(step(tag.to_string(), Step::Run(Command::Stability), cfg));
            }
        }
        other => return Err(CliError::UnknownPreset(other.to_string())),
    }
    for s in &steps {
        s.cfg.validate()?;
    }
    Ok(steps)
}

fn run_density_map(cfg: &RunConfig, out: &OutputDir, prefix: &str, x_lo: f64, x_hi: f64, stride: usize) -> Result<Value, CliError> {
    let mut summary = dispatch(Command::Analytic, cfg, out, prefix)?;
    let grid = cfg.grid()?;
    let state = cfg.droplet_state().expect("validated droplet");
    let columns: Vec<usize> = (0..grid.len())
        .filter(|&j| {
            let x = grid.x(j);
            x >= x_lo && x <= x_hi
        })
        .step_by(stride.max(1))
        .collect();
    let x: Vec<f64> = columns.iter().map(|&j| grid.x(j)).collect();
    let times = cfg.diagnostics.series.times();
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let psi = full_wavefunction(&state, &grid, t).map_err(|source| CliError::Analytic {
                context: "density map".into(),
                source,
            })?;
            Ok(columns.iter().map(|&j| psi.values()[j].norm_sqr()).collect())
        })
        .collect::<Result<_, CliError>>()?;
    let values: Vec<f64> = rows.concat();
    out.write(&format!("{prefix}density_map.csv"), &output::grid_csv("t", &times, "x", &x, &values))?;
    summary["density_map"] = json!({ "n_t": times.len(), "n_x": x.len() });
    Ok(summary)
}

impl From<droplet_core::GridError> for CliError {
    fn from(e: droplet_core::GridError) -> Self {
        CliError::Config(crate::config::ConfigError::Invalid {
            path: "grid".into(),
            message: e.to_string(),
        })
    }
}

/// Runs every step of a preset (in parallel) and writes one manifest.
pub fn run_preset(name: &str, user: &RunConfig) -> Result<Value, CliError> {
    let started = Instant::now();
    let steps = preset_steps(name, user)?;
    let out = OutputDir::create(&user.output_dir)?;
    let summaries: Vec<Value> = steps
        .par_iter()
        .map(|s| {
            let prefix = format!("{name}_{}_", s.label);
            let summary = match s.step {
                Step::Run(cmd) => dispatch(cmd, &s.cfg, &out, &prefix)?,
                Step::DensityMap { x_lo, x_hi, stride } => run_density_map(&s.cfg, &out, &prefix, x_lo, x_hi, stride)?,
            };
            let command = match s.step {
                Step::Run(cmd) => cmd.name(),
                Step::DensityMap { .. } => "density_map",
            };
            Ok(json!({
                "label": s.label,
                "command": command,
                "resolved_config": s.cfg.to_value(),
                "entropy_variant": entropy_variant(&s.cfg),
                "summary": summary,
            }))
        })
        .collect::<Result<_, CliError>>()?;
    let base = caption_config(user);
    let manifest = json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "command": "preset",
        "preset": name,
        "resolved_config": base.to_value(),
        "convention": base.convention().name(),
        "runs": summaries,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
    });
    out.finish(manifest.clone())?;
    Ok(manifest)
}
