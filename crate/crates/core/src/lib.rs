//! Closed-form quantum droplets of the one-dimensional extended
//! Gross-Pitaevskii equation in linear (gravity-like) potentials, a split-step
//! spectral propagator, and phase-space and entropy diagnostics.
//!
//! Lengths and times are in transverse-oscillator units. The kinetic term is
//! `-½ ∂²ₓ` unless a droplet is built with [`KineticConvention::FullLaplacian`].

pub mod analytic;
pub mod diagnostics;
pub mod grid;
pub mod potentials;
pub mod propagator;
pub mod quadrature;
pub mod stability;
pub mod units;

pub use analytic::{
    full_wavefunction, mu_of_norm, norm_of_mu, stationary_profile, stationary_residual, AnalyticError,
    DropletParams, DropletState, KineticConvention, MU0,
};
pub use diagnostics::{
    center_of_mass, entropy_series, norm, peak_position, shannon_entropy, shannon_entropy_with, wigner,
    DiagnosticsError, EntropyOptions, EntropySeries, MomentumWindow, WignerMap,
};
pub use grid::{ComplexField, GridError, SpatialGrid};
pub use potentials::{PotentialError, PotentialKind, PotentialSpec, TrajectoryPrediction};
pub use propagator::{evolve, evolve_with, EvolutionConfig, EvolutionRecord, PropagationError};
pub use stability::{add_noise, stability_run, NoiseDistribution, NoiseMode, NoiseSpec, StabilityError, StabilityReport};
