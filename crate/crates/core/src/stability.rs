//! Robustness of droplet evolution against white-noise perturbations of the
//! initial state.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{full_wavefunction, AnalyticError, DropletState};
use crate::grid::{ComplexField, SpatialGrid};
use crate::potentials::PotentialKind;
use crate::propagator::{evolve, evolve_periodic, EvolutionConfig, EvolutionRecord, PropagationError};

pub const CONSTANT_TRAP_THRESHOLD: f64 = 0.10;
pub const MODULATED_TRAP_THRESHOLD: f64 = 0.12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("noise fraction must lie in [0, 1), got {0}")]
    BadFraction(f64),
    #[error("at least two realizations are required, got {0}")]
    TooFewRealizations(usize),
    #[error("clean evolution failed: {0}")]
    Clean(PropagationError),
    #[error("realization {index} failed: {source}")]
    Realization {
        index: usize,
        #[source]
        source: PropagationError,
    },
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

impl StabilityError {
    /// The underlying propagation failure, if any.
    pub fn propagation(&self) -> Option<&PropagationError> {
        match self {
            Self::Clean(e) | Self::Realization { source: e, .. } => Some(e),
            _ => None,
        }
    }
}

/// What the noise fraction is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// `A = fraction * max|ψ|`.
    #[default]
    Amplitude,
    /// `A = sqrt(fraction * max|ψ|²)`.
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseDistribution {
    /// Real, uniform in `[-A, A]`.
    #[default]
    UniformReal,
    /// Complex, independent normal parts with total standard deviation `A`.
    GaussianComplex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub fraction: f64,
    pub seed: u64,
    pub n_realizations: usize,
    pub mode: NoiseMode,
    pub distribution: NoiseDistribution,
}

impl NoiseSpec {
    pub fn new(fraction: f64, seed: u64) -> Self {
        Self {
            fraction,
            seed,
            n_realizations: 8,
            mode: NoiseMode::Amplitude,
            distribution: NoiseDistribution::UniformReal,
        }
    }

    pub fn with_realizations(mut self, n: usize) -> Self {
        self.n_realizations = n;
        self
    }

    pub fn validate(&self) -> Result<(), StabilityError> {
        if !(self.fraction >= 0.0 && self.fraction < 1.0) {
            return Err(StabilityError::BadFraction(self.fraction));
        }
        if self.n_realizations < 2 {
            return Err(StabilityError::TooFewRealizations(self.n_realizations));
        }
        Ok(())
    }

    /// Noise amplitude `A` for a field with peak modulus `peak`.
    pub fn amplitude(&self, peak: f64) -> f64 {
        match self.mode {
            NoiseMode::Amplitude => self.fraction * peak,
            NoiseMode::Density => (self.fraction * peak * peak).sqrt(),
        }
    }
}

/// `ψ + R`, with `R` drawn from the stream `(seed, realization)`.
pub fn add_noise(psi: &ComplexField, spec: &NoiseSpec, realization: u64) -> ComplexField {
    let amp = spec.amplitude(psi.max_abs());
    if amp == 0.0 {
        return psi.clone();
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream(realization);
    let mut out = psi.clone();
    match spec.distribution {
        NoiseDistribution::UniformReal => {
            for v in out.values_mut() {
                *v += rng.random_range(-amp..=amp);
            }
        }
        NoiseDistribution::GaussianComplex => {
            let s = amp / 2f64.sqrt();
            for v in out.values_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += Complex64::new(s * re, s * im);
            }
        }
    }
    out
}

/// Pass threshold for a trap type.
pub fn pass_threshold(kind: PotentialKind) -> f64 {
    match kind {
        PotentialKind::ModulatedLinear => MODULATED_TRAP_THRESHOLD,
        PotentialKind::FreeSpace | PotentialKind::ConstantLinear => CONSTANT_TRAP_THRESHOLD,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub x: Vec<f64>,
    /// Clean density at the final time.
    pub clean_density: Vec<f64>,
    /// Mean noisy density at the final time.
    pub mean_density: Vec<f64>,
    /// Sample standard deviation of the final noisy densities.
    pub per_x_sd: Vec<f64>,
    /// `max_x(|mean - clean| + sd) / max_x(clean)`.
    pub max_relative_deviation: f64,
    pub pass_threshold: f64,
    pub passed: bool,
    pub clean: EvolutionRecord,
    /// Noisy records without snapshots, in realization order.
    pub noisy: Vec<EvolutionRecord>,
}

/// Evolves the analytic state and `n_realizations` perturbed copies with the
/// same configuration. Couplings are taken from the droplet parameters.
pub fn stability_run(
    state: &DropletState,
    grid: &Arc<SpatialGrid>,
    cfg: &EvolutionConfig,
    noise: &NoiseSpec,
) -> Result<StabilityReport, StabilityError> {
    noise.validate()?;
    let (g1, g2) = state.params.propagator_couplings();
    let cfg = EvolutionConfig { g1, g2, ..*cfg };
    let psi0 = full_wavefunction(state, grid, 0.0)?;
    let spec = state.potential;

    let clean = evolve(&psi0, &spec, &cfg).map_err(StabilityError::Clean)?;
    let noisy_cfg = EvolutionConfig {
        keep_snapshots: false,
        ..cfg
    };
    let noisy: Vec<EvolutionRecord> = (0..noise.n_realizations)
        .into_par_iter()
        .map(|index| {
            let start = add_noise(&psi0, noise, index as u64);
            evolve_periodic(&start, &spec, &noisy_cfg, |_, _| {})
                .map_err(|source| StabilityError::Realization { index, source })
        })
        .collect::<Result<_, _>>()?;

    let clean_density = clean.final_state.density();
    let n = noise.n_realizations as f64;
    let deltas: Vec<Vec<f64>> = noisy
        .iter()
        .map(|r| {
            r.final_state
                .density()
                .iter()
                .zip(&clean_density)
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    let len = clean_density.len();
    let mut mean_delta = vec![0.0; len];
    for d in &deltas {
        mean_delta.iter_mut().zip(d).for_each(|(m, v)| *m += v);
    }
    mean_delta.iter_mut().for_each(|m| *m /= n);
    let mut per_x_sd = vec![0.0; len];
    for d in &deltas {
        per_x_sd
            .iter_mut()
            .zip(d.iter().zip(&mean_delta))
            .for_each(|(s, (v, m))| *s += (v - m) * (v - m));
    }
    per_x_sd.iter_mut().for_each(|s| *s = (*s / (n - 1.0)).sqrt());

    let clean_peak = clean_density.iter().cloned().fold(0.0, f64::max);
    let envelope = mean_delta
        .iter()
        .zip(&per_x_sd)
        .map(|(m, s)| m.abs() + s)
        .fold(0.0, f64::max);
    let max_relative_deviation = envelope / clean_peak;
    let threshold = pass_threshold(spec.kind);
    Ok(StabilityReport {
        x: grid.positions().collect(),
        mean_density: clean_density.iter().zip(&mean_delta).map(|(c, m)| c + m).collect(),
        clean_density,
        per_x_sd,
        max_relative_deviation,
        pass_threshold: threshold,
        passed: max_relative_deviation < threshold,
        clean,
        noisy,
    })
}
