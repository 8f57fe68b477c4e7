//! Single-run pipelines behind the subcommands. Each writes its files into an
//! [`OutputDir`] under a name prefix and returns a JSON summary.

use std::io;
use std::sync::Arc;
use std::time::Instant;

use droplet_core::diagnostics::{density_at, entropy_series};
use droplet_core::{
    center_of_mass, evolve_with, full_wavefunction, norm, peak_position, shannon_entropy_with, stability_run, wigner,
    AnalyticError, DiagnosticsError, EntropySeries, PropagationError, SpatialGrid, StabilityError,
};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, label, Csv, OutputDir, SeriesRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown preset '{0}' (expected fig1 .. fig10)")]
    UnknownPreset(String),
    #[error("{context}: {source}")]
    Analytic { context: String, source: AnalyticError },
    #[error("{context}: {source}")]
    Diagnostics { context: String, source: DiagnosticsError },
    #[error("{context}: {source}")]
    Propagation { context: String, source: PropagationError },
    #[error("{context}: {source}")]
    Stability { context: String, source: StabilityError },
    #[error("stability threshold exceeded: max relative deviation {deviation:.4} >= {threshold}")]
    StabilityFailed { deviation: f64, threshold: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let propagation = match self {
            Self::Propagation { source, .. } => Some(source),
            Self::Stability { source, .. } => source.propagation(),
            _ => None,
        };
        match propagation {
            Some(PropagationError::BlowUp { .. }) => return 3,
            Some(PropagationError::DomainExit { .. }) => return 4,
            _ => {}
        }
        match self {
            Self::StabilityFailed { .. } => 5,
            Self::Io(_) => 1,
            _ => 2,
        }
    }
}

fn analytic_err(context: &str) -> impl FnOnce(AnalyticError) -> CliError + '_ {
    move |source| CliError::Analytic {
        context: context.to_string(),
        source,
    }
}

fn diag_err(context: &str) -> impl FnOnce(DiagnosticsError) -> CliError + '_ {
    move |source| CliError::Diagnostics {
        context: context.to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analytic,
    Evolve,
    Wigner,
    Entropy,
    Stability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::Evolve => "evolve",
            Self::Wigner => "wigner",
            Self::Entropy => "entropy",
            Self::Stability => "stability",
        }
    }
}

/// Runs one subcommand and writes its manifest. Stability failures under
/// `enforce` are reported after the manifest is written.
pub fn run_command(cmd: Command, cfg: &RunConfig, enforce: bool) -> Result<Value, CliError> {
    let started = Instant::now();
    let out = OutputDir::create(&cfg.output_dir)?;
    let summary = dispatch(cmd, cfg, &out, "")?;
    let manifest = manifest(cmd.name(), cfg, summary.clone(), started);
    out.finish(manifest.clone())?;
    if enforce && cmd == Command::Stability && summary["passed"] == Value::Bool(false) {
        return Err(CliError::StabilityFailed {
            deviation: summary["max_relative_deviation"].as_f64().unwrap_or(f64::NAN),
            threshold: summary["pass_threshold"].as_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(manifest)
}

pub fn dispatch(cmd: Command, cfg: &RunConfig, out: &OutputDir, prefix: &str) -> Result<Value, CliError> {
    match cmd {
        Command::Analytic => run_analytic(cfg, out, prefix),
        Command::Evolve => run_evolve(cfg, out, prefix),
        Command::Wigner => run_wigner(cfg, out, prefix),
        Command::Entropy => run_entropy(cfg, out, prefix),
        Command::Stability => run_stability(cfg, out, prefix),
    }
}

pub fn manifest(command: &str, cfg: &RunConfig, summary: Value, started: Instant) -> Value {
    json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "command": command,
        "resolved_config": cfg.to_value(),
        "convention": cfg.convention().name(),
        "entropy_variant": entropy_variant(cfg),
        "summary": summary,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
    })
}

pub fn entropy_variant(cfg: &RunConfig) -> Value {
    let e = &cfg.diagnostics.entropy;
    json!({
        "normalized": e.normalized,
        "log_base": e.base,
        "window_min": e.window_min,
        "window_max": e.window_max,
    })
}

fn context(cfg: &RunConfig) -> (Arc<SpatialGrid>, droplet_core::DropletState) {
    // validated at load
    (
        cfg.grid().expect("validated grid"),
        cfg.droplet_state().expect("validated droplet"),
    )
}

/// Analytic field snapshots, observable series and density probes.
pub fn run_analytic(cfg: &RunConfig, out: &OutputDir, prefix: &str) -> Result<Value, CliError> {
    let (grid, state) = context(cfg);
    for &t in &cfg.diagnostics.snapshot_times {
        let psi = full_wavefunction(&state, &grid, t).map_err(analytic_err("analytic snapshot"))?;
        out.write(&format!("{prefix}snapshot_t{}.csv", label(t)), &output::snapshot_csv(&psi))?;
    }
    let times = cfg.diagnostics.series.times();
    let opts = cfg.entropy_options();
    let probes = &cfg.diagnostics.probes;
    let rows: Vec<(SeriesRow, Vec<f64>)> = times
        .par_iter()
        .map(|&t| {
            let psi = full_wavefunction(&state, &grid, t).map_err(analytic_err("analytic series"))?;
            let entropy = shannon_entropy_with(&psi, &opts).map_err(diag_err("entropy"))?;
            let probe = probes
                .iter()
                .map(|&x| density_at(&psi, x).map_err(diag_err("density probe")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((
                SeriesRow {
                    t,
                    norm: norm(&psi),
                    x_cm: center_of_mass(&psi),
                    x_peak: peak_position(&psi),
                    entropy,
                },
                probe,
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let (series, probe_rows): (Vec<SeriesRow>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    out.write(&format!("{prefix}analytic_timeseries.csv"), &output::timeseries_csv(&series))?;
    if !probes.is_empty() {
        out.write(&format!("{prefix}probes.csv"), &output::probes_csv(probes, &times, &probe_rows))?;
    }
    Ok(json!({
        "norm": state.norm,
        "flat_top_ratio": state.params.flat_top_ratio(),
        "amplitude": state.params.amplitude(),
        "decay_rate": state.params.decay_rate(),
        "n_samples": times.len(),
    }))
}

/// Split-step evolution of the analytic initial state.
pub fn run_evolve(cfg: &RunConfig, out: &OutputDir, prefix: &str) -> Result<Value, CliError> {
    let (grid, state) = context(cfg);
    let psi0 = full_wavefunction(&state, &grid, 0.0).map_err(analytic_err("initial state"))?;
    let ev = cfg.evolution_config(&state.params);
    let spec = state.potential;
    let opts = cfg.entropy_options();
    let probes = &cfg.diagnostics.probes;
    let mut entropy = Vec::new();
    let mut probe_rows = Vec::new();
    let mut failure = None;
    let record = evolve_with(&psi0, &spec, &ev, |_, psi| {
        match shannon_entropy_with(psi, &opts) {
            Ok(s) => entropy.push(s),
            Err(e) => {
                failure.get_or_insert(e);
                entropy.push(f64::NAN);
            }
        }
        probe_rows.push(probes.iter().map(|&x| density_at(psi, x).unwrap_or(f64::NAN)).collect::<Vec<_>>());
    })
    .map_err(|source| CliError::Propagation {
        context: "evolution".into(),
        source,
    })?;
    if let Some(e) = failure {
        return Err(diag_err("entropy")(e));
    }

    let series: Vec<SeriesRow> = (0..record.len())
        .map(|i| SeriesRow {
            t: record.times[i],
            norm: record.norms[i],
            x_cm: record.centers_of_mass[i],
            x_peak: record.peak_positions[i],
            entropy: entropy[i],
        })
        .collect();
    out.write(&format!("{prefix}timeseries.csv"), &output::timeseries_csv(&series))?;
    let predicted = spec.predict_trajectory(&record.times).expect("recorded times are sorted");
    let mut traj = Csv::new("t,x_cm,x_predicted");
    for (i, &t) in record.times.iter().enumerate() {
        traj.row(&[t, record.centers_of_mass[i], predicted.positions[i]]);
    }
    out.write(&format!("{prefix}trajectory.csv"), &traj.into_bytes())?;
    if !probes.is_empty() {
        out.write(&format!("{prefix}probes.csv"), &output::probes_csv(probes, &record.times, &probe_rows))?;
    }
    out.write(&format!("{prefix}snapshot_final.csv"), &output::snapshot_csv(&record.final_state))?;
    for (i, snap) in record.snapshots.iter().enumerate() {
        out.write(&format!("{prefix}snapshots/record_{i:06}.csv"), &output::snapshot_csv(snap))?;
    }
    let last = record.len() - 1;
    Ok(json!({
        "final_time": record.times[last],
        "final_center_of_mass": record.centers_of_mass[last],
        "predicted_center": predicted.positions[last],
        "relative_norm_drift": record.relative_norm_drift(),
        "n_records": record.len(),
    }))
}

pub fn run_wigner(cfg: &RunConfig, out: &OutputDir, prefix: &str) -> Result<Value, CliError> {
    let (grid, state) = context(cfg);
    let t = cfg.diagnostics.wigner.time;
    let psi = full_wavefunction(&state, &grid, t).map_err(analytic_err("wigner state"))?;
    let window = cfg.wigner_window().map_err(diag_err("wigner window"))?;
    let map = wigner(&psi, &window).map_err(diag_err("wigner"))?;
    out.write(&format!("{prefix}wigner_t{}.csv", label(t)), &output::wigner_csv(&map))?;
    Ok(json!({
        "time": t,
        "p_min": window.p_min,
        "p_max": window.p_max,
        "n_p": window.n_p,
        "n_x": map.n_x(),
        "mass": map.mass(),
        "x_marginal_error": map.x_marginal_error,
        "imag_residue": map.imag_residue,
    }))
}

/// Entropy of analytic snapshots over the configured series.
pub fn entropy_of_analytic(cfg: &RunConfig) -> Result<EntropySeries, CliError> {
    let (grid, state) = context(cfg);
    let times = cfg.diagnostics.series.times();
    let opts = cfg.entropy_options();
    let entropy = times
        .par_iter()
        .map(|&t| {
            let psi = full_wavefunction(&state, &grid, t).map_err(analytic_err("entropy state"))?;
            shannon_entropy_with(&psi, &opts).map_err(diag_err("entropy"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EntropySeries { times, entropy })
}

pub fn run_entropy(cfg: &RunConfig, out: &OutputDir, prefix: &str) -> Result<Value, CliError> {
    let series = entropy_of_analytic(cfg)?;
    let mut csv = Csv::new("t,S_rho");
    for (t, s) in series.times.iter().zip(&series.entropy) {
        csv.row(&[*t, *s]);
    }
    out.write(&format!("{prefix}entropy.csv"), &csv.into_bytes())?;
    Ok(json!({
        "plateau": series.plateau(),
        "saturation_time": series.saturation_time(0.01),
        "variant": entropy_variant(cfg),
    }))
}

pub fn run_stability(cfg: &RunConfig, out: &OutputDir, prefix: &str) -> Result<Value, CliError> {
    let (grid, state) = context(cfg);
    let noise = cfg.noise_spec();
    let mut ev = cfg.evolution_config(&state.params);
    ev.keep_snapshots = true;
    let report = stability_run(&state, &grid, &ev, &noise).map_err(|source| CliError::Stability {
        context: "stability".into(),
        source,
    })?;

    let mut csv = Csv::new("x,clean_density,mean_density,sd");
    for i in 0..report.x.len() {
        csv.row(&[report.x[i], report.clean_density[i], report.mean_density[i], report.per_x_sd[i]]);
    }
    out.write(&format!("{prefix}stability.csv"), &csv.into_bytes())?;

    let clean = &report.clean;
    let entropy = entropy_series(clean, &cfg.entropy_options()).map_err(diag_err("entropy"))?;
    let series: Vec<SeriesRow> = (0..clean.len())
        .map(|i| SeriesRow {
            t: clean.times[i],
            norm: clean.norms[i],
            x_cm: clean.centers_of_mass[i],
            x_peak: clean.peak_positions[i],
            entropy: entropy.entropy[i],
        })
        .collect();
    out.write(&format!("{prefix}clean_timeseries.csv"), &output::timeseries_csv(&series))?;

    let n = report.noisy.len() as f64;
    let mut noisy = Csv::new("t,norm_mean,x_cm_mean,x_cm_sd");
    for (i, &t) in clean.times.iter().enumerate() {
        let norm_mean = report.noisy.iter().map(|r| r.norms[i]).sum::<f64>() / n;
        let xs: Vec<f64> = report.noisy.iter().map(|r| r.centers_of_mass[i]).collect();
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        noisy.row(&[t, norm_mean, mean, sd]);
    }
    out.write(&format!("{prefix}noisy_timeseries.csv"), &noisy.into_bytes())?;

    let summary = json!({
        "max_relative_deviation": report.max_relative_deviation,
        "pass_threshold": report.pass_threshold,
        "passed": report.passed,
        "n_realizations": noise.n_realizations,
        "noise_fraction": noise.fraction,
        "deviation_definition": "max_x(|mean noisy density - clean density| + sd) / max_x(clean density), final time",
    });
    out.write(
        &format!("{prefix}stability_report.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes").as_bytes(),
    )?;
    Ok(summary)
}
