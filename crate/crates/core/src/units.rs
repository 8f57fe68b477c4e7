//! Map from laboratory couplings to the dimensionless interaction strengths
//! of the reduced 1D equation (transverse-oscillator units).

use std::f64::consts::PI;

use thiserror::Error;

/// Reduced Planck constant in J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitsError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Laboratory parameters of the symmetric binary mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalInputs {
    /// Atomic mass in kg.
    pub mass: f64,
    /// Transverse trap frequency in rad/s.
    pub omega_perp: f64,
    /// Intra-component coupling `g` in J·m.
    pub g_intra: f64,
    /// Residual coupling `δg = g↑↓ + g` in J·m; positive for droplet existence.
    pub delta_g: f64,
}

impl DimensionalInputs {
    fn validate(&self) -> Result<(), UnitsError> {
        let fields = [
            ("mass", self.mass),
            ("omega_perp", self.omega_perp),
            ("g_intra", self.g_intra),
            ("delta_g", self.delta_g),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(UnitsError::NonPositive { name, value });
            }
        }
        Ok(())
    }
}

/// Dimensionless `(g1, g2)`: the quadratic (beyond-mean-field) and cubic
/// (effective mean-field) strengths.
///
/// `g2 = (δg/2)·√(m/(ω⊥³ħ³))`, `g1 = (1/π)·(m g²/(ω⊥ħ³))^{3/4}`.
pub fn dimensionless_couplings(inp: &DimensionalInputs) -> Result<(f64, f64), UnitsError> {
    inp.validate()?;
    let hbar3 = HBAR.powi(3);
    let g2 = 0.5 * inp.delta_g * (inp.mass / (inp.omega_perp.powi(3) * hbar3)).sqrt();
    let g1 = (inp.mass * inp.g_intra.powi(2) / (inp.omega_perp * hbar3)).powf(0.75) / PI;
    Ok((g1, g2))
}
