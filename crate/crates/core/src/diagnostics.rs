//! Observables of a wavefunction: moments, Wigner quasi-distribution and
//! Shannon entropy of the density.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{ComplexField, GridError};
use crate::propagator::EvolutionRecord;
use crate::quadrature::trapezoid;

/// Samples with `|ψ|` below this are outside the Wigner support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Allowed x-marginal mismatch of a Wigner map, relative to the peak density.
pub const MARGINAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("invalid momentum window [{p_min}, {p_max}] with {n_p} samples")]
    BadWindow { p_min: f64, p_max: f64, n_p: usize },
    #[error("wavefunction vanishes everywhere")]
    EmptySupport,
    #[error("momentum window misses the x-marginal by {margin:e} (relative to peak density)")]
    MarginalMismatch { margin: f64 },
    #[error("record holds no snapshots")]
    NoSnapshots,
    #[error("wavefunction has zero norm")]
    ZeroNorm,
    #[error("invalid entropy window [{lo}, {hi}]")]
    BadEntropyWindow { lo: f64, hi: f64 },
    #[error("log base must be positive and not 1, got {0}")]
    BadLogBase(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn norm(psi: &ComplexField) -> f64 {
    trapezoid(&psi.density(), psi.grid().dx())
}

/// `⟨x⟩ = ∫ x |ψ|² dx / ∫ |ψ|² dx`.
pub fn center_of_mass(psi: &ComplexField) -> f64 {
    let dens = psi.density();
    let weighted: Vec<f64> = psi.grid().positions().zip(&dens).map(|(x, d)| x * d).collect();
    let dx = psi.grid().dx();
    trapezoid(&weighted, dx) / trapezoid(&dens, dx)
}

/// Position of the density maximum (first one on ties).
pub fn peak_position(psi: &ComplexField) -> f64 {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (j, v) in psi.values().iter().enumerate() {
        let d = v.norm_sqr();
        if d > best.1 {
            best = (j, d);
        }
    }
    psi.grid().x(best.0)
}

/// Density at `x`, linearly interpolated between grid nodes.
pub fn density_at(psi: &ComplexField, x: f64) -> Result<f64, DiagnosticsError> {
    let grid = psi.grid();
    grid.check_contains(x)?;
    let s = (x - grid.x_min()) / grid.dx();
    let j = (s.floor() as usize).min(grid.len() - 2);
    let w = s - j as f64;
    let v = psi.values();
    Ok((1.0 - w) * v[j].norm_sqr() + w * v[j + 1].norm_sqr())
}

/// Momentum-space density `|ψ̃(p)|²` with `ψ̃(p) = (2π)^{-1/2} ∫ ψ(x) e^{-ipx} dx`,
/// evaluated by direct summation at arbitrary `p`.
pub fn momentum_density(psi: &ComplexField, p: &[f64]) -> Vec<f64> {
    let grid = psi.grid();
    let pref = grid.dx() / (2.0 * PI).sqrt();
    p.par_iter()
        .map(|&p| {
            let amp: Complex64 = psi
                .values()
                .iter()
                .zip(grid.positions())
                .map(|(v, x)| v * Complex64::from_polar(1.0, -p * x))
                .sum();
            (amp * pref).norm_sqr()
        })
        .collect()
}

/// Uniform momentum samples `p_min + j (p_max - p_min)/n_p`, `j < n_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumWindow {
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl MomentumWindow {
    pub fn new(p_min: f64, p_max: f64, n_p: usize) -> Result<Self, DiagnosticsError> {
        if !(p_min.is_finite() && p_max.is_finite() && p_max > p_min && n_p >= 2) {
            return Err(DiagnosticsError::BadWindow { p_min, p_max, n_p });
        }
        Ok(Self { p_min, p_max, n_p })
    }

    /// `[p0 - half_width, p0 + half_width)`.
    pub fn centered(p0: f64, half_width: f64, n_p: usize) -> Result<Self, DiagnosticsError> {
        Self::new(p0 - half_width, p0 + half_width, n_p)
    }

    /// One full period of the on-grid Wigner sum, `[-k_max/2, k_max/2)`.
    pub fn full_period(grid: &crate::grid::SpatialGrid, n_p: usize) -> Result<Self, DiagnosticsError> {
        let h = 0.5 * grid.k_max();
        Self::new(-h, h, n_p)
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_p).map(|j| self.p_min + j as f64 * self.dp()).collect()
    }
}

/// Wigner map on the support rows of a wavefunction. Rows outside the support
/// are identically zero and not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Row-major: `values[i * p.len() + j] = W(x[i], p[j])`.
    pub values: Vec<f64>,
    /// Largest discarded imaginary part.
    pub imag_residue: f64,
    /// Largest `|∫W dp - |ψ|²|` relative to the peak density.
    pub x_marginal_error: f64,
}

impl WignerMap {
    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn n_p(&self) -> usize {
        self.p.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n_p = self.p.len();
        &self.values[i * n_p..(i + 1) * n_p]
    }

    /// `∫ W dp` per row by the trapezoid rule.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.p[1] - self.p[0];
        (0..self.n_x()).map(|i| trapezoid(self.row(i), dp)).collect()
    }

    /// `∫ W dx` per momentum sample.
    pub fn p_marginal(&self) -> Vec<f64> {
        let dx = self.x[1] - self.x[0];
        (0..self.n_p())
            .map(|j| {
                let col: Vec<f64> = (0..self.n_x()).map(|i| self.at(i, j)).collect();
                trapezoid(&col, dx)
            })
            .collect()
    }

    /// `∬ W dx dp`.
    pub fn mass(&self) -> f64 {
        let dx = self.x[1] - self.x[0];
        trapezoid(&self.x_marginal(), dx)
    }
}

/// Wigner function with the default marginal check.
pub fn wigner(psi: &ComplexField, window: &MomentumWindow) -> Result<WignerMap, DiagnosticsError> {
    let map = wigner_unchecked(psi, window)?;
    if map.x_marginal_error > MARGINAL_TOLERANCE {
        return Err(DiagnosticsError::MarginalMismatch {
            margin: map.x_marginal_error,
        });
    }
    Ok(map)
}

/// `W(x, p) = (1/π) ∫ ψ*(x+y) ψ(x-y) e^{2ipy} dy` with `y` restricted to
/// integer multiples of `dx`, so every product uses grid samples directly.
pub fn wigner_unchecked(psi: &ComplexField, window: &MomentumWindow) -> Result<WignerMap, DiagnosticsError> {
    let grid = psi.grid();
    let v = psi.values();
    let dx = grid.dx();
    let lo = v.iter().position(|c| c.norm() >= SUPPORT_THRESHOLD).ok_or(DiagnosticsError::EmptySupport)?;
    let hi = v.iter().rposition(|c| c.norm() >= SUPPORT_THRESHOLD).expect("support non-empty");
    if hi - lo < 2 {
        return Err(DiagnosticsError::EmptySupport);
    }
    let p = window.points();
    let n_p = p.len();
    let m_max = (hi - lo) / 2;
    // twiddle[m * n_p + j] = exp(2 i m dx p_j)
    let twiddle: Vec<Complex64> = (0..=m_max)
        .flat_map(|m| p.iter().map(move |&pj| Complex64::from_polar(1.0, 2.0 * m as f64 * dx * pj)))
        .collect();
    let scale = dx / PI;

    let rows: Vec<(Vec<f64>, f64)> = (lo..=hi)
        .into_par_iter()
        .map(|i| {
            let reach = (i - lo).min(hi - i);
            let mut acc = vec![v[i].norm_sqr() * Complex64::new(1.0, 0.0); n_p];
            for m in 1..=reach {
                let plus = v[i + m].conj() * v[i - m];
                let minus = v[i - m].conj() * v[i + m];
                let tw = &twiddle[m * n_p..(m + 1) * n_p];
                for (a, t) in acc.iter_mut().zip(tw) {
                    *a += plus * t + minus * t.conj();
                }
            }
            let imag = acc.iter().map(|a| a.im.abs()).fold(0.0, f64::max) * scale;
            (acc.into_iter().map(|a| a.re * scale).collect(), imag)
        })
        .collect();

    let mut values = Vec::with_capacity(rows.len() * n_p);
    let mut imag_residue = 0.0f64;
    for (row, imag) in &rows {
        values.extend_from_slice(row);
        imag_residue = imag_residue.max(*imag);
    }
    let x: Vec<f64> = (lo..=hi).map(|i| grid.x(i)).collect();
    let mut map = WignerMap {
        x,
        p,
        values,
        imag_residue,
        x_marginal_error: 0.0,
    };
    let peak = (lo..=hi).map(|i| v[i].norm_sqr()).fold(0.0, f64::max);
    map.x_marginal_error = map
        .x_marginal()
        .iter()
        .zip(lo..=hi)
        .map(|(m, i)| (m - v[i].norm_sqr()).abs())
        .fold(0.0, f64::max)
        / peak;
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyOptions {
    /// Divide the density by the total norm before taking the log.
    pub normalized: bool,
    /// Restrict the integral to `lo <= x <= hi`.
    pub window: Option<(f64, f64)>,
    pub log_base: f64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self {
            normalized: true,
            window: None,
            log_base: std::f64::consts::E,
        }
    }
}

impl EntropyOptions {
    pub fn raw() -> Self {
        Self {
            normalized: false,
            ..Self::default()
        }
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = Some((lo, hi));
        self
    }

    pub fn with_base(mut self, base: f64) -> Self {
        self.log_base = base;
        self
    }

    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        let b = self.log_base;
        if !(b.is_finite() && b > 0.0 && b != 1.0) {
            return Err(DiagnosticsError::BadLogBase(b));
        }
        if let Some((lo, hi)) = self.window {
            if lo.is_nan() || hi.is_nan() || hi < lo {
                return Err(DiagnosticsError::BadEntropyWindow { lo, hi });
            }
        }
        Ok(())
    }
}

/// `S = -∫ ρ ln ρ dx`, natural log, unit-normalized density.
pub fn shannon_entropy(psi: &ComplexField) -> Result<f64, DiagnosticsError> {
    shannon_entropy_with(psi, &EntropyOptions::default())
}

pub fn shannon_entropy_with(psi: &ComplexField, opts: &EntropyOptions) -> Result<f64, DiagnosticsError> {
    opts.validate()?;
    let grid = psi.grid();
    let mut dens = psi.density();
    if opts.normalized {
        let n = trapezoid(&dens, grid.dx());
        if n <= 0.0 || !n.is_finite() {
            return Err(DiagnosticsError::ZeroNorm);
        }
        dens.iter_mut().for_each(|d| *d /= n);
    }
    let (start, end) = match opts.window {
        None => (0, dens.len()),
        Some((lo, hi)) => {
            let start = grid.positions().position(|x| x >= lo).unwrap_or(dens.len());
            let end = grid.positions().rposition(|x| x <= hi).map_or(0, |e| e + 1);
            (start, end.max(start))
        }
    };
    let integrand: Vec<f64> = dens[start..end]
        .iter()
        .map(|&d| if d > 1e-300 { -d * d.ln() } else { 0.0 })
        .collect();
    Ok(trapezoid(&integrand, grid.dx()) / opts.log_base.ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
}

impl EntropySeries {
    /// Last sample, taken as the plateau value of a saturating series.
    pub fn plateau(&self) -> f64 {
        *self.entropy.last().expect("non-empty series")
    }

    /// First time the series is within `rel` of its plateau and stays there.
    pub fn saturation_time(&self, rel: f64) -> f64 {
        let s_inf = self.plateau();
        let band = rel * s_inf.abs();
        let last_out = self.entropy.iter().rposition(|s| (s - s_inf).abs() > band);
        match last_out {
            Some(i) if i + 1 < self.times.len() => self.times[i + 1],
            Some(i) => self.times[i],
            None => self.times[0],
        }
    }
}

pub fn entropy_series(record: &EvolutionRecord, opts: &EntropyOptions) -> Result<EntropySeries, DiagnosticsError> {
    if record.snapshots.is_empty() {
        return Err(DiagnosticsError::NoSnapshots);
    }
    let entropy = record
        .snapshots
        .par_iter()
        .map(|s| shannon_entropy_with(s, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EntropySeries {
        times: record.times.clone(),
        entropy,
    })
}
