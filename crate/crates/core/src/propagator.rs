//! Split-step Fourier propagation of
//!
//! ```text
//! i ψ_t = -½ ψ_xx + g2 |ψ|² ψ - g1 |ψ| ψ + a(t) x ψ
//! ```
//!
//! on a periodic grid. Each step is a symmetric (Strang) splitting: half a
//! kinetic step in Fourier space, the full nonlinear + potential phase with
//! `a` sampled at the interval midpoint, then another half kinetic step.
//! Consecutive half kinetic steps are fused between observation points.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::diagnostics;
use crate::grid::{ComplexField, SpatialGrid, SpectralPlan};
use crate::potentials::{PotentialError, PotentialSpec};

/// Regularizer inside `|ψ| = √(|ψ|² + ε)`.
const MODULUS_EPS: f64 = 1e-300;

/// The peak may not come closer than this many grid spacings to an edge.
pub const EDGE_GUARD_CELLS: f64 = 10.0;

/// Largest boundary amplitude accepted for an initial state.
pub const INITIAL_TAIL_LIMIT: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("non-finite field after step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },
    #[error("droplet peak at x = {peak} reached the domain edge at t = {time}")]
    DomainExit { time: f64, peak: f64 },
    #[error("initial state not localized: |psi| = {0:e} at the boundary")]
    InitialTails(f64),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Observer stride in steps.
    pub record_every: usize,
    /// Quadratic (attractive) coupling.
    pub g1: f64,
    /// Cubic (repulsive) coupling.
    pub g2: f64,
    pub keep_snapshots: bool,
}

impl EvolutionConfig {
    pub fn new(dt: f64, n_steps: usize, record_every: usize, g1: f64, g2: f64) -> Self {
        Self {
            dt,
            n_steps,
            record_every,
            g1,
            g2,
            keep_snapshots: false,
        }
    }

    pub fn with_snapshots(mut self, keep: bool) -> Self {
        self.keep_snapshots = keep;
        self
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(PropagationError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(PropagationError::InvalidConfig("record_every must be positive".into()));
        }
        for (name, g) in [("g1", self.g1), ("g2", self.g2)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(PropagationError::InvalidConfig(format!("{name} must be non-negative, got {g}")));
            }
        }
        Ok(())
    }

    /// Kinetic phase accumulated per step by the highest resolved mode.
    pub fn max_kinetic_phase(&self, grid: &SpatialGrid) -> f64 {
        0.5 * grid.k_max().powi(2) * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// `a(t + dt/2)`: the potential coefficient at the centre of a step.
pub fn time_ordered_potential_midpoint(spec: &PotentialSpec, t: f64, dt: f64) -> f64 {
    spec.gamma_ddot(t + 0.5 * dt)
}

/// Reusable split-step integrator for one grid, potential and configuration.
pub struct SplitStepper {
    grid: Arc<SpatialGrid>,
    spec: PotentialSpec,
    cfg: EvolutionConfig,
    plan: SpectralPlan,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
    edge_cells: usize,
    steps_taken: usize,
}

impl SplitStepper {
    pub fn new(grid: Arc<SpatialGrid>, spec: PotentialSpec, cfg: EvolutionConfig) -> Result<Self, PropagationError> {
        cfg.validate()?;
        spec.validate()?;
        let phase = cfg.max_kinetic_phase(&grid);
        if phase >= PI {
            log::warn!("kinetic phase per step {phase:.3} exceeds pi; high modes alias (reduce dt)");
        }
        let n = grid.len();
        let scale = 1.0 / n as f64;
        let multiplier = |fraction: f64| -> Vec<Complex64> {
            grid.k_values()
                .iter()
                .map(|&k| Complex64::from_polar(scale, -0.5 * k * k * cfg.dt * fraction))
                .collect()
        };
        Ok(Self {
            half_kinetic: multiplier(0.5),
            full_kinetic: multiplier(1.0),
            plan: SpectralPlan::new(n),
            edge_cells: EDGE_GUARD_CELLS as usize,
            grid,
            spec,
            cfg,
            steps_taken: 0,
        })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    fn kinetic(&mut self, psi: &mut [Complex64], full: bool) {
        self.plan.forward(psi);
        let mult = if full { &self.full_kinetic } else { &self.half_kinetic };
        psi.iter_mut().zip(mult).for_each(|(v, m)| *v *= m);
        self.plan.inverse(psi);
    }

    /// Pointwise phase `exp(-i[g2|ψ|² - g1|ψ| + a x] dt)`; returns the peak index.
    fn nonlinear(&self, psi: &mut [Complex64], t: f64) -> Result<usize, PropagationError> {
        let a_mid = time_ordered_potential_midpoint(&self.spec, t, self.cfg.dt);
        let (g1, g2, dt) = (self.cfg.g1, self.cfg.g2, self.cfg.dt);
        let (x0, dx) = (self.grid.x_min(), self.grid.dx());
        let mut peak = (0usize, -1.0f64);
        let mut finite = true;
        for (j, v) in psi.iter_mut().enumerate() {
            let dens = v.norm_sqr();
            finite &= dens.is_finite();
            if dens > peak.1 {
                peak = (j, dens);
            }
            let x = x0 + j as f64 * dx;
            let phase = (g2 * dens - g1 * (dens + MODULUS_EPS).sqrt() + a_mid * x) * dt;
            *v *= Complex64::from_polar(1.0, -phase);
        }
        if !finite {
            return Err(PropagationError::BlowUp {
                step: self.steps_taken,
                time: t,
            });
        }
        Ok(peak.0)
    }

    fn check_edges(&self, peak: usize, t: f64) -> Result<(), PropagationError> {
        let n = self.grid.len();
        if peak < self.edge_cells || peak >= n - self.edge_cells {
            return Err(PropagationError::DomainExit {
                time: t,
                peak: self.grid.x(peak),
            });
        }
        Ok(())
    }

    /// One symmetric step from `t` to `t + dt`.
    pub fn step(&mut self, psi: &mut [Complex64], t: f64) -> Result<(), PropagationError> {
        self.advance(psi, t, 1)
    }

    /// `n` consecutive steps starting at `t0`, with the inner half kinetic
    /// steps fused.
    pub fn advance(&mut self, psi: &mut [Complex64], t0: f64, n: usize) -> Result<(), PropagationError> {
        if n == 0 {
            return Ok(());
        }
        let dt = self.cfg.dt;
        self.kinetic(psi, false);
        for s in 0..n {
            let t = t0 + s as f64 * dt;
            let peak = self.nonlinear(psi, t)?;
            self.steps_taken += 1;
            self.check_edges(peak, t + dt)?;
            self.kinetic(psi, s + 1 < n);
        }
        if psi.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(PropagationError::BlowUp {
                step: self.steps_taken,
                time: t0 + n as f64 * dt,
            });
        }
        Ok(())
    }
}

/// Single step on a standalone field.
pub fn step(psi: &ComplexField, spec: &PotentialSpec, cfg: &EvolutionConfig, t: f64) -> Result<ComplexField, PropagationError> {
    let mut stepper = SplitStepper::new(psi.shared_grid().clone(), *spec, *cfg)?;
    let mut values = psi.values().to_vec();
    stepper.step(&mut values, t)?;
    Ok(ComplexField::new(psi.shared_grid().clone(), values).expect("length preserved"))
}

/// Observables sampled every `record_every` steps (plus the final step).
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub centers_of_mass: Vec<f64>,
    pub peak_positions: Vec<f64>,
    pub snapshots: Vec<ComplexField>,
    pub final_state: ComplexField,
}

impl EvolutionRecord {
    /// Record built from precomputed states, e.g. analytic snapshots.
    pub fn from_snapshots(times: Vec<f64>, snapshots: Vec<ComplexField>) -> Self {
        assert_eq!(times.len(), snapshots.len(), "one snapshot per time");
        assert!(!snapshots.is_empty(), "at least one snapshot");
        let mut record = Self::empty(snapshots[0].clone());
        for (t, s) in times.into_iter().zip(&snapshots) {
            record.observe(t, s, false);
        }
        record.final_state = snapshots.last().cloned().expect("non-empty");
        record.snapshots = snapshots;
        record
    }

    fn empty(state: ComplexField) -> Self {
        Self {
            times: Vec::new(),
            norms: Vec::new(),
            centers_of_mass: Vec::new(),
            peak_positions: Vec::new(),
            snapshots: Vec::new(),
            final_state: state,
        }
    }

    fn observe(&mut self, t: f64, psi: &ComplexField, keep: bool) {
        self.times.push(t);
        self.norms.push(diagnostics::norm(psi));
        self.centers_of_mass.push(diagnostics::center_of_mass(psi));
        self.peak_positions.push(diagnostics::peak_position(psi));
        if keep {
            self.snapshots.push(psi.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn relative_norm_drift(&self) -> f64 {
        let n0 = self.norms[0];
        self.norms
            .iter()
            .map(|n| ((n - n0) / n0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn evolve(psi0: &ComplexField, spec: &PotentialSpec, cfg: &EvolutionConfig) -> Result<EvolutionRecord, PropagationError> {
    evolve_with(psi0, spec, cfg, |_, _| {})
}

/// Evolves `psi0` for `cfg.n_steps`, calling `observer` at each recorded time.
pub fn evolve_with(
    psi0: &ComplexField,
    spec: &PotentialSpec,
    cfg: &EvolutionConfig,
    observer: impl FnMut(f64, &ComplexField),
) -> Result<EvolutionRecord, PropagationError> {
    let values = psi0.values();
    let tail = values[0].norm().max(values[values.len() - 1].norm());
    if tail > INITIAL_TAIL_LIMIT {
        return Err(PropagationError::InitialTails(tail));
    }
    evolve_periodic(psi0, spec, cfg, observer)
}

/// Same as [`evolve_with`] without the localization precondition, for states
/// such as noise-perturbed fields that are nonzero across the periodic cell.
pub fn evolve_periodic(
    psi0: &ComplexField,
    spec: &PotentialSpec,
    cfg: &EvolutionConfig,
    mut observer: impl FnMut(f64, &ComplexField),
) -> Result<EvolutionRecord, PropagationError> {
    if !psi0.is_finite() {
        return Err(PropagationError::BlowUp { step: 0, time: 0.0 });
    }
    let mut stepper = SplitStepper::new(psi0.shared_grid().clone(), *spec, *cfg)?;
    let mut state = psi0.clone();
    let mut record = EvolutionRecord::empty(psi0.clone());
    record.observe(0.0, &state, cfg.keep_snapshots);
    observer(0.0, &state);

    let mut done = 0;
    while done < cfg.n_steps {
        let chunk = cfg.record_every.min(cfg.n_steps - done);
        let t0 = done as f64 * cfg.dt;
        stepper.advance(state.values_mut(), t0, chunk)?;
        done += chunk;
        let t = done as f64 * cfg.dt;
        record.observe(t, &state, cfg.keep_snapshots);
        observer(t, &state);
    }
    record.final_state = state;
    Ok(record)
}
