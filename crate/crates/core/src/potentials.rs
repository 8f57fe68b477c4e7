//! Linear gravitational-like potentials `V(x, t) = a(t)·x` described through
//! the traveling-frame shift `γ(t)`.
//!
//! The potential coefficient is always `γ''(t)` and the droplet centre sits
//! at `-γ(t)`. The user-facing strength `a ≥ 0` pulls towards `+x`:
//!
//! | variant           | `γ(t)`                                 | `γ''(t)`             |
//! |-------------------|----------------------------------------|----------------------|
//! | `FreeSpace`       | `0`                                    | `0`                  |
//! | `ConstantLinear`  | `-a t²/2`                              | `-a`                 |
//! | `ModulatedLinear` | `-a t²/2 + (aα/ω²)(cos ωt - c₀)`       | `-a(1 + α cos ωt)`   |
//!
//! where `c₀ = 1` when `zero_initial_offset` is set and `0` otherwise.

use thiserror::Error;

use crate::grid::SpatialGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("acceleration strength must be finite and non-negative, got {0}")]
    BadStrength(f64),
    #[error("modulation amplitude must be finite, got {0}")]
    BadAmplitude(f64),
    #[error("modulated trap needs a positive drive frequency, got {0}")]
    BadFrequency(f64),
    #[error("trajectory times must be finite and sorted ascending (index {0})")]
    UnsortedTimes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotentialKind {
    FreeSpace,
    ConstantLinear,
    ModulatedLinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub a: f64,
    pub alpha: f64,
    pub omega: f64,
    pub zero_initial_offset: bool,
}

impl PotentialSpec {
    pub fn free_space() -> Self {
        Self {
            kind: PotentialKind::FreeSpace,
            a: 0.0,
            alpha: 0.0,
            omega: 1.0,
            zero_initial_offset: true,
        }
    }

    pub fn constant(a: f64) -> Self {
        Self {
            kind: PotentialKind::ConstantLinear,
            a,
            ..Self::free_space()
        }
    }

    /// Modulated trap released from the origin (`zero_initial_offset = true`).
    pub fn modulated(a: f64, alpha: f64, omega: f64) -> Self {
        Self {
            kind: PotentialKind::ModulatedLinear,
            a,
            alpha,
            omega,
            zero_initial_offset: true,
        }
    }

    pub fn with_zero_initial_offset(mut self, zero: bool) -> Self {
        self.zero_initial_offset = zero;
        self
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        match self.kind {
            PotentialKind::FreeSpace => Ok(()),
            PotentialKind::ConstantLinear => check_strength(self.a),
            PotentialKind::ModulatedLinear => {
                check_strength(self.a)?;
                if !self.alpha.is_finite() {
                    return Err(PotentialError::BadAmplitude(self.alpha));
                }
                if !(self.omega.is_finite() && self.omega > 0.0) {
                    return Err(PotentialError::BadFrequency(self.omega));
                }
                Ok(())
            }
        }
    }

    pub fn gamma(&self, t: f64) -> f64 {
        match self.kind {
            PotentialKind::FreeSpace => 0.0,
            PotentialKind::ConstantLinear => -0.5 * self.a * t * t,
            PotentialKind::ModulatedLinear => {
                let offset = if self.zero_initial_offset { 1.0 } else { 0.0 };
                let amp = self.a * self.alpha / (self.omega * self.omega);
                -0.5 * self.a * t * t + amp * ((self.omega * t).cos() - offset)
            }
        }
    }

    pub fn gamma_dot(&self, t: f64) -> f64 {
        match self.kind {
            PotentialKind::FreeSpace => 0.0,
            PotentialKind::ConstantLinear => -self.a * t,
            PotentialKind::ModulatedLinear => {
                -self.a * t - self.a * self.alpha / self.omega * (self.omega * t).sin()
            }
        }
    }

    pub fn gamma_ddot(&self, t: f64) -> f64 {
        match self.kind {
            PotentialKind::FreeSpace => 0.0,
            PotentialKind::ConstantLinear => -self.a,
            PotentialKind::ModulatedLinear => {
                -self.a * (1.0 + self.alpha * (self.omega * t).cos())
            }
        }
    }

    /// Coefficient `a(t)` of `V = a(t)·x`; identical to [`Self::gamma_ddot`].
    #[inline]
    pub fn coefficient(&self, t: f64) -> f64 {
        self.gamma_ddot(t)
    }

    /// `∫₀ᵗ γ'(s)² ds` in closed form.
    pub fn velocity_square_integral(&self, t: f64) -> f64 {
        match self.kind {
            PotentialKind::FreeSpace => 0.0,
            PotentialKind::ConstantLinear => self.a * self.a * t.powi(3) / 3.0,
            PotentialKind::ModulatedLinear => {
                // γ' = -(a s + b sin ωs) with b = aα/ω
                let (a, w) = (self.a, self.omega);
                let b = a * self.alpha / w;
                let wt = w * t;
                let s_sin = wt.sin() / (w * w) - t * wt.cos() / w;
                let sin_sq = 0.5 * t - (2.0 * wt).sin() / (4.0 * w);
                a * a * t.powi(3) / 3.0 + 2.0 * a * b * s_sin + b * b * sin_sq
            }
        }
    }

    /// `V_j = γ''(t)·x_j` on every grid point.
    pub fn potential_values(&self, grid: &SpatialGrid, t: f64) -> Vec<f64> {
        let c = self.coefficient(t);
        grid.positions().map(|x| c * x).collect()
    }

    pub fn predict_trajectory(&self, times: &[f64]) -> Result<TrajectoryPrediction, PotentialError> {
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() || (i > 0 && *t < times[i - 1]) {
                return Err(PotentialError::UnsortedTimes(i));
            }
        }
        Ok(TrajectoryPrediction {
            times: times.to_vec(),
            positions: times.iter().map(|&t| -self.gamma(t)).collect(),
            velocities: times.iter().map(|&t| -self.gamma_dot(t)).collect(),
        })
    }
}

fn check_strength(a: f64) -> Result<(), PotentialError> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(PotentialError::BadStrength(a))
    }
}

/// Predicted centre-of-mass motion `x_cm = -γ(t)`, `v_cm = -γ'(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPrediction {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}
