use alloc::vec;
use alloc::vec::Vec;

use super::MemoryKernel;
use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue_symmetric;

/// Relative eigenvalue noise floor for the positive-definiteness verdict.
pub const TOL_PD_RELATIVE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdVerdict {
    PositiveDefinite,
    Indefinite,
}

/// Result of the discrete positive-definiteness test.
#[derive(Debug, Clone, PartialEq)]
pub struct PdCertificate {
    pub horizon: f64,
    pub resolution: usize,
    pub min_eigenvalue: f64,
    /// Verdict threshold: `TOL_PD_RELATIVE` times the matrix ∞-norm.
    pub tolerance: f64,
    pub verdict: PdVerdict,
    /// Largest accepted δ for the strong test (0 otherwise).
    pub delta: f64,
}

impl PdCertificate {
    pub fn is_positive_definite(&self) -> bool {
        self.verdict == PdVerdict::PositiveDefinite
    }
}

/// Brute-force test of `∫_0^T y(τ) ∫_0^τ h(τ-s) y(s) ds dτ ≥ 0` for scalar `y`.
///
/// Builds `K[i][j] = h((i-j)·T/n)·T/n` for `j ≤ i`, symmetrizes it and
/// inspects the smallest eigenvalue.
pub fn certify_positive_definite(kernel_fn: impl Fn(f64) -> f64, horizon: f64, n: usize) -> Result<PdCertificate> {
    if n < 2 {
        return Err(Error::ParameterViolation("PD certificate needs n >= 2".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::ParameterViolation("PD certificate needs T > 0".into()));
    }
    let step = horizon / n as f64;
    let samples: Vec<f64> = (0..n).map(|k| kernel_fn(k as f64 * step) * step).collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("kernel is not finite on [0, T]".into()));
    }
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            s[i * n + j] = if i == j { samples[0] } else { 0.5 * samples[i.abs_diff(j)] };
        }
    }
    let norm = (0..n).map(|i| s[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let min_eigenvalue = min_eigenvalue_symmetric(&mut s, n)?;
    let tolerance = TOL_PD_RELATIVE * norm;
    let verdict = if min_eigenvalue >= -tolerance { PdVerdict::PositiveDefinite } else { PdVerdict::Indefinite };
    Ok(PdCertificate { horizon, resolution: n, min_eigenvalue, tolerance, verdict, delta: 0.0 })
}

/// Largest `δ` in `delta_grid` for which `a(t) - δe^{-t}` certifies positive definite.
pub fn certify_strongly_pd(kernel: &MemoryKernel, horizon: f64, n: usize, delta_grid: &[f64]) -> Result<PdCertificate> {
    certify_strongly_pd_fn(|t| kernel.a(t), horizon, n, delta_grid)
}

/// [`certify_strongly_pd`] for an arbitrary kernel function.
pub fn certify_strongly_pd_fn(
    kernel_fn: impl Fn(f64) -> f64,
    horizon: f64,
    n: usize,
    delta_grid: &[f64],
) -> Result<PdCertificate> {
    if delta_grid.iter().any(|&d| !(d > 0.0)) || delta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ParameterViolation("delta grid must be positive and increasing".into()));
    }
    let mut best: Option<PdCertificate> = None;
    let mut last = None;
    // positive definiteness is monotone in δ, scan from the top
    for &delta in delta_grid.iter().rev() {
        let cert = certify_positive_definite(|t| kernel_fn(t) - delta * libm::exp(-t), horizon, n)?;
        if cert.is_positive_definite() {
            best = Some(PdCertificate { delta, ..cert });
            break;
        }
        last = Some(cert);
    }
    match best {
        Some(c) => Ok(c),
        None => {
            let cert = match last {
                Some(c) => c,
                None => certify_positive_definite(&kernel_fn, horizon, n)?,
            };
            Ok(PdCertificate { verdict: PdVerdict::Indefinite, delta: 0.0, ..cert })
        }
    }
}
