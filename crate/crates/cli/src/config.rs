//! Run configuration: a single JSON document with defaults for every key,
//! plus dotted `key=value` overrides.

use std::sync::Arc;

use droplet_core::{
    DropletParams, DropletState, EntropyOptions, EvolutionConfig, KineticConvention, MomentumWindow, NoiseDistribution,
    NoiseMode, NoiseSpec, PotentialSpec, SpatialGrid, MU0,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("bad override '{0}': expected key=value")]
    BadOverride(String),
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub droplet: DropletConfig,
    pub potential: PotentialConfig,
    pub evolution: EvolutionSection,
    pub diagnostics: DiagnosticsConfig,
    pub noise: Option<NoiseConfig>,
    pub output_dir: String,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            droplet: DropletConfig::default(),
            potential: PotentialConfig::default(),
            evolution: EvolutionSection::default(),
            diagnostics: DiagnosticsConfig::default(),
            noise: None,
            output_dir: "out".into(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_points: usize,
    /// Left edge; `null` centres the grid on the origin.
    pub x_min: Option<f64>,
    pub dx: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: 4096,
            x_min: None,
            dx: 0.0488,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    HalfLaplacian,
    FullLaplacian,
}

impl From<Convention> for KineticConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::HalfLaplacian => KineticConvention::HalfLaplacian,
            Convention::FullLaplacian => KineticConvention::FullLaplacian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DropletConfig {
    /// Atom number `N`. Exclusive with `mu_ratio`.
    pub norm: Option<f64>,
    /// `μ/μ0`. Exclusive with `norm`.
    pub mu_ratio: Option<f64>,
    /// Quadratic (attractive) coupling, positive.
    pub g1: f64,
    /// Cubic (repulsive) coupling, positive.
    pub g2: f64,
    pub convention: Convention,
}

impl Default for DropletConfig {
    fn default() -> Self {
        Self {
            norm: None,
            mu_ratio: None,
            g1: 1.0,
            g2: 0.9999,
            convention: Convention::HalfLaplacian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    FreeSpace,
    Constant,
    Modulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub variant: Variant,
    pub a: Option<f64>,
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    pub zero_initial_offset: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
    /// Write a field snapshot at every recorded time.
    pub snapshots: bool,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            n_steps: 10_000,
            record_every: 100,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Times of analytic field snapshots.
    pub snapshot_times: Vec<f64>,
    /// Sampling of analytic time series.
    pub series: SeriesConfig,
    /// Density probe positions.
    pub probes: Vec<f64>,
    pub wigner: WignerConfig,
    pub entropy: EntropyConfig,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            snapshot_times: vec![0.0, 1.0],
            series: SeriesConfig::default(),
            probes: Vec::new(),
            wigner: WignerConfig::default(),
            entropy: EntropyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    pub t_end: f64,
    pub dt: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { t_end: 10.0, dt: 0.05 }
    }
}

impl SeriesConfig {
    pub fn times(&self) -> Vec<f64> {
        let n = (self.t_end / self.dt).round() as usize;
        (0..=n).map(|i| i as f64 * self.dt).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerConfig {
    pub time: f64,
    /// Explicit window; when absent the window is centred on the droplet's
    /// classical momentum with `half_width`.
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub half_width: f64,
    pub n_p: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            time: 1.0,
            p_min: None,
            p_max: None,
            half_width: 6.0,
            n_p: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyConfig {
    pub normalized: bool,
    pub window_min: Option<f64>,
    pub window_max: Option<f64>,
    pub base: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            normalized: true,
            window_min: None,
            window_max: None,
            base: std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModeConfig {
    #[default]
    Amplitude,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistributionConfig {
    #[default]
    UniformReal,
    GaussianComplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub fraction: f64,
    pub n_realizations: usize,
    pub mode: NoiseModeConfig,
    pub distribution: NoiseDistributionConfig,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            fraction: 0.01,
            n_realizations: 8,
            mode: NoiseModeConfig::Amplitude,
            distribution: NoiseDistributionConfig::UniformReal,
        }
    }
}

/// Parses a config document, or a run manifest (its `resolved_config`), and
/// applies `overrides` before validation.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc: Value = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?
    };
    if let Some(resolved) = doc.get("resolved_config") {
        doc = resolved.clone();
    }
    if !doc.is_object() {
        return Err(ConfigError::Malformed("top level must be an object".into()));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        invalid(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg.resolved())
}

/// Sets `a.b.c = value`; the value is parsed as JSON when possible, otherwise
/// taken as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(assignment.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::BadOverride(assignment.to_string()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

impl RunConfig {
    /// Checks cross-field invariants and every module precondition reachable
    /// from the config.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.droplet;
        if d.norm.is_some() && d.mu_ratio.is_some() {
            return Err(invalid("droplet.norm, droplet.mu_ratio", "give exactly one of norm and mu_ratio"));
        }
        for (key, g) in [("droplet.g1", d.g1), ("droplet.g2", d.g2)] {
            if !(g.is_finite() && g > 0.0) {
                return Err(invalid(key, format!("must be positive, got {g} (quote sign-flipped sets by magnitude)")));
            }
        }
        let p = &self.potential;
        match p.variant {
            Variant::FreeSpace | Variant::Constant => {
                let extra: Vec<&str> = [
                    ("potential.alpha", p.alpha.is_some()),
                    ("potential.omega", p.omega.is_some()),
                    ("potential.zero_initial_offset", p.zero_initial_offset.is_some()),
                ]
                .iter()
                .filter(|(_, set)| *set)
                .map(|(k, _)| *k)
                .collect();
                if !extra.is_empty() {
                    let variant = if p.variant == Variant::Constant { "constant" } else { "free_space" };
                    return Err(invalid(
                        &format!("{}, potential.variant", extra.join(", ")),
                        format!("only valid with variant = modulated (got {variant})"),
                    ));
                }
                if p.variant == Variant::FreeSpace && p.a.is_some_and(|a| a != 0.0) {
                    return Err(invalid("potential.a, potential.variant", "free_space takes no strength"));
                }
            }
            Variant::Modulated => {
                if p.alpha.is_none() || p.omega.is_none() {
                    return Err(invalid("potential.alpha, potential.omega", "required for variant = modulated"));
                }
            }
        }
        self.potential_spec()
            .validate()
            .map_err(|e| invalid("potential", e.to_string()))?;
        self.grid().map_err(|e| invalid("grid", e.to_string()))?;
        self.droplet_params().map_err(|e| invalid("droplet", e.to_string()))?;

        let ev = &self.evolution;
        EvolutionConfig::new(ev.dt, ev.n_steps, ev.record_every, 0.0, 0.0)
            .validate()
            .map_err(|e| invalid("evolution", e.to_string()))?;
        let s = &self.diagnostics.series;
        if !(s.dt > 0.0 && s.t_end >= 0.0 && s.t_end.is_finite()) {
            return Err(invalid("diagnostics.series", "need dt > 0 and finite t_end >= 0"));
        }
        if self.diagnostics.snapshot_times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("diagnostics.snapshot_times", "times must be finite"));
        }
        let w = &self.diagnostics.wigner;
        if w.p_min.is_some() != w.p_max.is_some() {
            return Err(invalid("diagnostics.wigner.p_min, diagnostics.wigner.p_max", "give both or neither"));
        }
        if !(w.half_width > 0.0) {
            return Err(invalid("diagnostics.wigner.half_width", "must be positive"));
        }
        MomentumWindow::new(w.p_min.unwrap_or(-1.0), w.p_max.unwrap_or(1.0), w.n_p)
            .map_err(|e| invalid("diagnostics.wigner", e.to_string()))?;
        self.entropy_options()
            .validate()
            .map_err(|e| invalid("diagnostics.entropy", e.to_string()))?;
        if let Some(n) = &self.noise {
            self.noise_spec_from(n)
                .validate()
                .map_err(|e| invalid("noise", e.to_string()))?;
        }
        Ok(())
    }

    /// Fills defaults that depend on other keys so the config round-trips.
    pub fn resolved(mut self) -> Self {
        if self.droplet.norm.is_none() && self.droplet.mu_ratio.is_none() {
            self.droplet.norm = Some(1.0);
        }
        if self.potential.variant == Variant::Modulated && self.potential.zero_initial_offset.is_none() {
            self.potential.zero_initial_offset = Some(true);
        }
        if self.potential.variant != Variant::FreeSpace && self.potential.a.is_none() {
            self.potential.a = Some(0.0);
        }
        self
    }

    pub fn grid(&self) -> Result<Arc<SpatialGrid>, droplet_core::GridError> {
        let g = &self.grid;
        let grid = match g.x_min {
            Some(x0) => SpatialGrid::new(g.n_points, x0, g.dx)?,
            None => SpatialGrid::centered(g.n_points, g.dx)?,
        };
        Ok(Arc::new(grid))
    }

    pub fn convention(&self) -> KineticConvention {
        self.droplet.convention.into()
    }

    pub fn droplet_params(&self) -> Result<DropletParams, droplet_core::AnalyticError> {
        let d = &self.droplet;
        match d.mu_ratio {
            Some(m) => DropletParams::new(m * MU0, d.g1, d.g2, self.convention()),
            None => DropletParams::from_norm(d.norm.unwrap_or(1.0), d.g1, d.g2, self.convention()),
        }
    }

    pub fn potential_spec(&self) -> PotentialSpec {
        let p = &self.potential;
        let a = p.a.unwrap_or(0.0);
        match p.variant {
            Variant::FreeSpace => PotentialSpec::free_space(),
            Variant::Constant => PotentialSpec::constant(a),
            Variant::Modulated => PotentialSpec::modulated(a, p.alpha.unwrap_or(0.0), p.omega.unwrap_or(1.0))
                .with_zero_initial_offset(p.zero_initial_offset.unwrap_or(true)),
        }
    }

    pub fn droplet_state(&self) -> Result<DropletState, droplet_core::AnalyticError> {
        DropletState::new(self.droplet_params()?, self.potential_spec())
    }

    pub fn evolution_config(&self, params: &DropletParams) -> EvolutionConfig {
        let (g1, g2) = params.propagator_couplings();
        let ev = &self.evolution;
        EvolutionConfig::new(ev.dt, ev.n_steps, ev.record_every, g1, g2).with_snapshots(ev.snapshots)
    }

    pub fn entropy_options(&self) -> EntropyOptions {
        let e = &self.diagnostics.entropy;
        let mut opts = EntropyOptions {
            normalized: e.normalized,
            ..EntropyOptions::default()
        }
        .with_base(e.base);
        if e.window_min.is_some() || e.window_max.is_some() {
            opts = opts.with_window(e.window_min.unwrap_or(f64::NEG_INFINITY), e.window_max.unwrap_or(f64::INFINITY));
        }
        opts
    }

    /// Wigner window at the configured time.
    pub fn wigner_window(&self) -> Result<MomentumWindow, droplet_core::DiagnosticsError> {
        let w = &self.diagnostics.wigner;
        match (w.p_min, w.p_max) {
            (Some(lo), Some(hi)) => MomentumWindow::new(lo, hi, w.n_p),
            _ => {
                let p0 = -self.potential_spec().gamma_dot(w.time);
                MomentumWindow::centered(p0, w.half_width, w.n_p)
            }
        }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        self.noise_spec_from(&self.noise.clone().unwrap_or_default())
    }

    fn noise_spec_from(&self, n: &NoiseConfig) -> NoiseSpec {
        NoiseSpec {
            fraction: n.fraction,
            seed: self.seed,
            n_realizations: n.n_realizations,
            mode: match n.mode {
                NoiseModeConfig::Amplitude => NoiseMode::Amplitude,
                NoiseModeConfig::Density => NoiseMode::Density,
            },
            distribution: match n.distribution {
                NoiseDistributionConfig::UniformReal => NoiseDistribution::UniformReal,
                NoiseDistributionConfig::GaussianComplex => NoiseDistribution::GaussianComplex,
            },
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
