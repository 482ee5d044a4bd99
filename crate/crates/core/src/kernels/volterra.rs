use alloc::vec::Vec;

use super::quadrature::QuadratureWeights;
use crate::error::{Error, Result};

/// Solves `φ + h∗φ = rhs` by forward substitution under the same quadrature
/// that [`super::convolve_with`] applies, so the two are exact inverses up to
/// rounding.
pub fn volterra_solve_with(weights: &QuadratureWeights, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() > weights.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), got: rhs.len() });
    }
    let diag = 1.0 + weights.newest();
    if diag.abs() < 1e-14 {
        return Err(Error::SingularStep(diag));
    }
    let mut phi = Vec::with_capacity(rhs.len());
    for (n, &r) in rhs.iter().enumerate() {
        if n == 0 {
            phi.push(r);
            continue;
        }
        let mut history = weights.oldest(n) * phi[0];
        for (j, &p) in phi.iter().enumerate().take(n).skip(1) {
            history += weights.interior(n - j) * p;
        }
        phi.push((r - history) / diag);
    }
    Ok(phi)
}

/// Second-kind Volterra solve with trapezoid weights sampled from `h`.
pub fn volterra_solve(h: impl Fn(f64) -> f64, rhs: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::ParameterViolation("Volterra step must be positive".into()));
    }
    let weights = QuadratureWeights::trapezoid_fn(h, dt, rhs.len());
    volterra_solve_with(&weights, rhs)
}
