use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("trapezoid rule needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Composite trapezoid estimate of the integral of uniformly spaced samples.
pub fn integrate(samples: &[f64], dx: f64) -> Result<f64, QuadratureError> {
    if samples.len() < 2 {
        return Err(QuadratureError::TooFewSamples(samples.len()));
    }
    let interior: f64 = samples[1..samples.len() - 1].iter().sum();
    let ends = 0.5 * (samples[0] + samples[samples.len() - 1]);
    Ok(dx * (interior + ends))
}

/// Same as [`integrate`] for data already known to have at least two samples.
pub(crate) fn trapezoid(samples: &[f64], dx: f64) -> f64 {
    integrate(samples, dx).unwrap_or(0.0)
}
