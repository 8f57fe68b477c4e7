//! Closed-form droplet solutions.
//!
//! The stationary profile solves
//!
//! ```text
//! -c U'' - G1 |U| U + G2 |U|² U = E U,      c = 1/2 or 1
//! ```
//!
//! with `U(η) = A / (1 + B cosh(k η))`, where
//! `k = √(-E/c)`, `A = 3 c k² / G1` and `B = √(1 - (μ/μ0)(G2/G1))`,
//! `μ = E/G1`, `μ0 = -2/9`. Couplings are positive and `E < 0`; the
//! propagated equation always carries the `1/2` kinetic factor, so the
//! `FullLaplacian` convention maps to propagator couplings `G/2`.
//!
//! The traveling solution in a linear potential is
//! `ψ(x,t) = U(x + γ(t)) exp(i[-γ'(t) x - ½∫₀ᵗ γ'(s)² ds - λ t])`
//! with `λ = E/(2c)` the stationary frequency of the propagated equation.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{spectral_second_derivative_real, ComplexField, SpatialGrid};
use crate::potentials::{PotentialError, PotentialSpec};

/// Reference chemical potential of the flat-top limit.
pub const MU0: f64 = -2.0 / 9.0;

/// Boundary amplitude above which a sampled profile counts as truncated.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("couplings must be positive and finite (G1 = {g1}, G2 = {g2})")]
    BadCouplings { g1: f64, g2: f64 },
    #[error("eigenvalue must be negative, got E = {0}")]
    NonNegativeEnergy(f64),
    #[error("flat-top ratio (mu/mu0)(G2/G1) = {0} leaves (0, 1]; the profile is not real and normalizable")]
    BadFlatTopRatio(f64),
    #[error("chemical-potential ratio {0} must lie strictly inside (0, 1)")]
    RatioOutOfRange(f64),
    #[error("atom number must be positive and finite, got {0}")]
    BadNorm(f64),
    #[error("atom number {requested} exceeds the largest representable value {max}")]
    NormTooLarge { requested: f64, max: f64 },
    #[error("profile tails not decayed at the grid edges (|U| = {left:e}, {right:e})")]
    NonDecayedTails { left: f64, right: f64 },
    #[error("droplet centre {center} is within {margin} of a grid boundary")]
    NearBoundary { center: f64, margin: f64 },
    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Kinetic prefactor of the stationary equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KineticConvention {
    /// `-½ U''`: the propagated equation itself.
    #[default]
    HalfLaplacian,
    /// `-U''`: couplings and eigenvalue are twice the propagated ones.
    FullLaplacian,
}

impl KineticConvention {
    pub fn coefficient(self) -> f64 {
        match self {
            KineticConvention::HalfLaplacian => 0.5,
            KineticConvention::FullLaplacian => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KineticConvention::HalfLaplacian => "half_laplacian",
            KineticConvention::FullLaplacian => "full_laplacian",
        }
    }
}

/// Chemical potential, couplings and eigenvalue of a stationary droplet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropletParams {
    mu: f64,
    g1: f64,
    g2: f64,
    energy: f64,
    convention: KineticConvention,
}

impl DropletParams {
    /// From the chemical potential `μ = E/G1` and positive couplings.
    pub fn new(mu: f64, g1: f64, g2: f64, convention: KineticConvention) -> Result<Self, AnalyticError> {
        if !(g1.is_finite() && g2.is_finite() && g1 > 0.0 && g2 > 0.0) {
            return Err(AnalyticError::BadCouplings { g1, g2 });
        }
        let energy = mu * g1;
        if !(energy.is_finite() && energy < 0.0) {
            return Err(AnalyticError::NonNegativeEnergy(energy));
        }
        let params = Self {
            mu,
            g1,
            g2,
            energy,
            convention,
        };
        let r = params.flat_top_ratio();
        if !(r > 0.0 && r <= 1.0) {
            return Err(AnalyticError::BadFlatTopRatio(r));
        }
        Ok(params)
    }

    /// From `r = (μ/μ0)(G2/G1)`.
    pub fn from_flat_top_ratio(r: f64, g1: f64, g2: f64, convention: KineticConvention) -> Result<Self, AnalyticError> {
        if !(g1.is_finite() && g2.is_finite() && g1 > 0.0 && g2 > 0.0) {
            return Err(AnalyticError::BadCouplings { g1, g2 });
        }
        if !(r > 0.0 && r <= 1.0) {
            return Err(AnalyticError::BadFlatTopRatio(r));
        }
        Self::new(MU0 * r * g1 / g2, g1, g2, convention)
    }

    /// Droplet holding `n` atoms for the given couplings.
    pub fn from_norm(n: f64, g1: f64, g2: f64, convention: KineticConvention) -> Result<Self, AnalyticError> {
        if !(g1.is_finite() && g2.is_finite() && g1 > 0.0 && g2 > 0.0) {
            return Err(AnalyticError::BadCouplings { g1, g2 });
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(AnalyticError::BadNorm(n));
        }
        let ratio = mu_of_norm(n / norm_scale(g1, g2, convention))?;
        Self::from_flat_top_ratio(ratio, g1, g2, convention)
    }

    /// Adapter for parameter sets quoted with a negative quadratic coupling and
    /// negative chemical potential (e.g. `μ = μ0`, `G1 = -1`, `G2 = 0.9999`):
    /// magnitudes are used, `r = (|μ|/|μ0|)(G2/|G1|)`.
    pub fn from_signed_figure_set(mu: f64, g1: f64, g2: f64, convention: KineticConvention) -> Result<Self, AnalyticError> {
        let g1 = g1.abs();
        if !(g1 > 0.0) {
            return Err(AnalyticError::BadCouplings { g1, g2 });
        }
        let r = (mu.abs() / MU0.abs()) * (g2 / g1);
        Self::from_flat_top_ratio(r, g1, g2, convention)
    }

    pub fn with_convention(mut self, convention: KineticConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu0(&self) -> f64 {
        MU0
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn g2(&self) -> f64 {
        self.g2
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn convention(&self) -> KineticConvention {
        self.convention
    }

    /// `r = (μ/μ0)(G2/G1)`.
    pub fn flat_top_ratio(&self) -> f64 {
        (self.mu / MU0) * (self.g2 / self.g1)
    }

    /// `B = √(1 - r)`; vanishes in the flat-top limit.
    pub fn shape_b(&self) -> f64 {
        (1.0 - self.flat_top_ratio()).max(0.0).sqrt()
    }

    pub fn decay_rate(&self) -> f64 {
        (-self.energy / self.convention.coefficient()).sqrt()
    }

    pub fn amplitude(&self) -> f64 {
        let k = self.decay_rate();
        3.0 * self.convention.coefficient() * k * k / self.g1
    }

    /// Couplings `(g1, g2)` of the propagated equation (kinetic factor ½).
    pub fn propagator_couplings(&self) -> (f64, f64) {
        match self.convention {
            KineticConvention::HalfLaplacian => (self.g1, self.g2),
            KineticConvention::FullLaplacian => (0.5 * self.g1, 0.5 * self.g2),
        }
    }

    /// Stationary frequency `λ` of the propagated equation: `ψ ∝ e^{-iλt}`.
    pub fn eigen_frequency(&self) -> f64 {
        self.energy / (2.0 * self.convention.coefficient())
    }

    /// Atom number `∫U² dx`; infinite in the flat-top limit `r = 1`.
    pub fn norm(&self) -> f64 {
        let r = self.flat_top_ratio();
        if r >= 1.0 {
            return f64::INFINITY;
        }
        norm_of_mu(r).map_or(f64::INFINITY, |n| n * norm_scale(self.g1, self.g2, self.convention))
    }

    /// `U(η)`.
    pub fn profile_at(&self, eta: f64) -> f64 {
        let denom = 1.0 + self.shape_b() * (self.decay_rate() * eta).cosh();
        self.amplitude() / denom
    }
}

/// Factor relating the atom number of general couplings to the unit-coupling
/// half-Laplacian relation `N(r)`.
fn norm_scale(g1: f64, g2: f64, convention: KineticConvention) -> f64 {
    let base = g1 / g2.powf(1.5);
    match convention {
        KineticConvention::HalfLaplacian => base,
        KineticConvention::FullLaplacian => base * std::f64::consts::SQRT_2,
    }
}

/// A droplet together with the potential it falls in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropletState {
    pub params: DropletParams,
    pub potential: PotentialSpec,
    pub norm: f64,
}

impl DropletState {
    pub fn new(params: DropletParams, potential: PotentialSpec) -> Result<Self, AnalyticError> {
        potential.validate()?;
        Ok(Self {
            params,
            potential,
            norm: params.norm(),
        })
    }
}

pub fn stationary_profile(params: &DropletParams, grid: &SpatialGrid) -> Result<Vec<f64>, AnalyticError> {
    // re-validate in case the caller built params with an altered convention
    DropletParams::new(params.mu, params.g1, params.g2, params.convention)?;
    Ok(grid.positions().map(|x| params.profile_at(x)).collect())
}

/// L∞ norm of `-c U'' - G1|U|U + G2|U|²U - E U`, with `U''` taken spectrally.
pub fn stationary_residual(u: &[f64], params: &DropletParams, grid: &SpatialGrid) -> Result<f64, AnalyticError> {
    if u.len() != grid.len() {
        return Err(AnalyticError::LengthMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    let (left, right) = (u[0].abs(), u[u.len() - 1].abs());
    if left > TAIL_TOLERANCE || right > TAIL_TOLERANCE {
        return Err(AnalyticError::NonDecayedTails { left, right });
    }
    let c = params.convention.coefficient();
    let d2 = spectral_second_derivative_real(u, grid);
    let worst = u
        .iter()
        .zip(&d2)
        .map(|(&v, &dv)| {
            (-c * dv - params.g1 * v.abs() * v + params.g2 * v * v * v - params.energy * v).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Traveling droplet `ψ(x, t)` on `grid`.
pub fn full_wavefunction(state: &DropletState, grid: &Arc<SpatialGrid>, t: f64) -> Result<ComplexField, AnalyticError> {
    let p = &state.params;
    let spec = &state.potential;
    let gamma = spec.gamma(t);
    let center = -gamma;
    let margin = 10.0 / p.decay_rate();
    if grid.edge_distance(center) < margin {
        return Err(AnalyticError::NearBoundary { center, margin });
    }
    let velocity = spec.gamma_dot(t);
    let global = -0.5 * spec.velocity_square_integral(t) - p.eigen_frequency() * t;
    Ok(ComplexField::from_fn(grid.clone(), |x| {
        let envelope = p.profile_at(x + gamma);
        Complex64::from_polar(envelope, -velocity * x + global)
    }))
}

/// `N(r) = (4/3)[ln((1+√r)/√(1-r)) - √r]` for `r = μ/μ0 ∈ (0, 1)`.
pub fn norm_of_mu(mu_ratio: f64) -> Result<f64, AnalyticError> {
    if !(mu_ratio > 0.0 && mu_ratio < 1.0) {
        return Err(AnalyticError::RatioOutOfRange(mu_ratio));
    }
    let s = mu_ratio.sqrt();
    // ln((1+s)/√(1-s²)) = atanh(s); expand near 0 to avoid cancellation
    let excess = if s < 1e-2 {
        let s2 = s * s;
        let mut term = s * s2;
        let mut acc = 0.0;
        for n in (3..=15).step_by(2) {
            acc += term / n as f64;
            term *= s2;
        }
        acc
    } else {
        s.atanh() - s
    };
    Ok(4.0 / 3.0 * excess)
}

/// Inverse of [`norm_of_mu`] by bisection down to adjacent floats.
pub fn mu_of_norm(n: f64) -> Result<f64, AnalyticError> {
    if !(n.is_finite() && n > 0.0) {
        return Err(AnalyticError::BadNorm(n));
    }
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = 1.0 - f64::EPSILON / 2.0;
    let max = norm_of_mu(hi)?;
    if n > max {
        return Err(AnalyticError::NormTooLarge { requested: n, max });
    }
    if n <= norm_of_mu(lo)? {
        return Ok(lo);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_of_mu(mid)? < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (nl, nh) = (norm_of_mu(lo)?, norm_of_mu(hi)?);
    Ok(if (n - nl).abs() <= (nh - n).abs() { lo } else { hi })
}
