//! Uniform periodic grids, complex fields sampled on them, and the spectral
//! helpers shared by the propagator and the residual checks.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("grid origin must be finite, got {0}")]
    BadOrigin(f64),
    #[error("field has {got} samples but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("position {x} lies outside the grid [{x_min}, {x_max}]")]
    OutOfRange { x: f64, x_min: f64, x_max: f64 },
}

/// Uniform 1D grid in oscillator units with its discrete-transform wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n_points: usize,
    x_min: f64,
    dx: f64,
    k_values: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(n_points: usize, x_min: f64, dx: f64) -> Result<Self, GridError> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(GridError::NotPowerOfTwo(n_points));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(GridError::BadSpacing(dx));
        }
        if !x_min.is_finite() {
            return Err(GridError::BadOrigin(x_min));
        }
        let dk = 2.0 * PI / (n_points as f64 * dx);
        let half = n_points / 2;
        let k_values = (0..n_points)
            .map(|j| {
                if j < half {
                    j as f64 * dk
                } else {
                    (j as f64 - n_points as f64) * dk
                }
            })
            .collect();
        Ok(Self {
            n_points,
            x_min,
            dx,
            k_values,
        })
    }

    /// Grid of `n_points` centred on the origin: `x_min = -n_points/2 * dx`.
    pub fn centered(n_points: usize, dx: f64) -> Result<Self, GridError> {
        Self::new(n_points, -(n_points as f64 / 2.0) * dx, dx)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n_points - 1)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        (0..self.n_points).map(move |j| self.x(j))
    }

    pub fn k_values(&self) -> &[f64] {
        &self.k_values
    }

    /// Nyquist wavenumber `π/dx`.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max()
    }

    pub fn check_contains(&self, x: f64) -> Result<(), GridError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GridError::OutOfRange {
                x,
                x_min: self.x_min,
                x_max: self.x_max(),
            })
        }
    }

    /// Distance from `x` to the nearer grid edge (negative outside the grid).
    pub fn edge_distance(&self, x: f64) -> f64 {
        (x - self.x_min).min(self.x_max() - x)
    }
}

/// Complex wavefunction samples on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Arc<SpatialGrid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<SpatialGrid>, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<SpatialGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<SpatialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.positions().map(f).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Arc<SpatialGrid>, real: &[f64]) -> Result<Self, GridError> {
        let values = real.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Forward/inverse transform pair for one grid size. Both directions are
/// unnormalized; `inverse_normalized` applies the `1/n` factor.
#[derive(Clone)]
pub struct SpectralPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SpectralPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
    }

    pub fn inverse_normalized(&mut self, data: &mut [Complex64]) {
        self.inverse(data);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Spectral second derivative of complex samples on `grid`.
pub fn spectral_second_derivative(values: &[Complex64], grid: &SpatialGrid) -> Vec<Complex64> {
    let mut plan = SpectralPlan::new(grid.len());
    let mut data = values.to_vec();
    plan.forward(&mut data);
    for (v, &k) in data.iter_mut().zip(grid.k_values()) {
        *v *= -k * k;
    }
    plan.inverse_normalized(&mut data);
    data
}

/// Spectral second derivative of real samples; the imaginary residue is dropped.
pub fn spectral_second_derivative_real(values: &[f64], grid: &SpatialGrid) -> Vec<f64> {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral_second_derivative(&complex, grid)
        .into_iter()
        .map(|v| v.re)
        .collect()
}
