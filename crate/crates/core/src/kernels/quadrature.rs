use alloc::vec;
use alloc::vec::Vec;

use super::{MemoryKernel, Order};
use crate::error::{Error, Result};
use crate::quad;

/// Convolution weights on a uniform grid.
///
/// `(h∗f)(t_n) ≈ newest·f_n + Σ_{0<j<n} interior[n-j]·f_j + oldest[n]·f_0`.
/// For the trapezoid rule these are kernel samples times `dt` with a `½`
/// factor at both endpoints; product integration replaces the samples by
/// exact integrals of the kernel against hat functions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights {
    dt: f64,
    newest: f64,
    interior: Vec<f64>,
    oldest: Vec<f64>,
}

impl QuadratureWeights {
    /// Trapezoid weights from samples `h(k·dt)`, `k = 0..samples.len()`.
    pub fn trapezoid(samples: &[f64], dt: f64) -> Self {
        let newest = 0.5 * dt * samples.first().copied().unwrap_or(0.0);
        let interior = samples.iter().map(|h| dt * h).collect();
        let oldest = samples.iter().map(|h| 0.5 * dt * h).collect();
        QuadratureWeights { dt, newest, interior, oldest }
    }

    /// Trapezoid weights from a kernel function sampled on `len` points.
    pub fn trapezoid_fn(h: impl Fn(f64) -> f64, dt: f64, len: usize) -> Self {
        let samples: Vec<f64> = (0..len).map(|k| h(k as f64 * dt)).collect();
        Self::trapezoid(&samples, dt)
    }

    /// Product-integration weights: `f` is interpolated linearly and the
    /// kernel integrated exactly (to quadrature tolerance) on each cell.
    ///
    /// `singular_exponent = Some(β)` declares an integrable `τ^{-β}`
    /// singularity at the origin, removed on the first cell by `τ = dt·r^{1/(1-β)}`.
    pub fn product(h: impl Fn(f64) -> f64, dt: f64, len: usize, singular_exponent: Option<f64>) -> Self {
        let mut interior = vec![0.0; len];
        let mut oldest = vec![0.0; len];
        let mut newest = 0.0;
        let tol = 1e-15;
        for cell in 0..len.saturating_sub(1) {
            let t0 = cell as f64 * dt;
            // rising hat (weight of the left sample of lag cell+1), falling hat (lag cell)
            let (rising, falling) = match (cell, singular_exponent) {
                (0, Some(beta)) => {
                    let q = 1.0 / (1.0 - beta);
                    let jac = |r: f64| dt * q * libm::pow(r, q - 1.0);
                    let tau = |r: f64| dt * libm::pow(r, q);
                    let up = quad::integrate(
                        |r| if r == 0.0 { 0.0 } else { h(tau(r)) * jac(r) * (tau(r) / dt) },
                        0.0,
                        1.0,
                        tol,
                    )
                    .0;
                    let down = quad::integrate(
                        |r| if r == 0.0 { 0.0 } else { h(tau(r)) * jac(r) * (1.0 - tau(r) / dt) },
                        0.0,
                        1.0,
                        tol,
                    )
                    .0;
                    (up, down)
                }
                _ => {
                    let up = quad::integrate(|tau| h(tau) * (tau - t0) / dt, t0, t0 + dt, tol).0;
                    let down = quad::integrate(|tau| h(tau) * (t0 + dt - tau) / dt, t0, t0 + dt, tol).0;
                    (up, down)
                }
            };
            if cell == 0 {
                newest = falling;
            } else {
                interior[cell] += falling;
            }
            interior[cell + 1] += rising;
            oldest[cell + 1] = rising;
        }
        QuadratureWeights { dt, newest, interior, oldest }
    }

    /// Weights for convolving against `a` or `ȧ` of a kernel over `len` samples.
    ///
    /// `ȧ` of a kernel with a singular origin uses product integration,
    /// everything else the trapezoid rule.
    pub fn for_kernel(kernel: &MemoryKernel, order: Order, dt: f64, len: usize) -> Self {
        match (order, kernel.singular_exponent()) {
            (Order::ADot, Some(beta)) => Self::product(|t| kernel.a_dot(t), dt, len, Some(beta)),
            (Order::A, _) => Self::trapezoid_fn(|t| kernel.a(t), dt, len),
            (Order::ADot, None) => Self::trapezoid_fn(|t| kernel.a_dot(t), dt, len),
            (Order::ADdot, _) => Self::trapezoid_fn(|t| kernel.a_ddot(t), dt, len),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of time levels covered.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    /// Weight of the current sample (lag 0).
    pub fn newest(&self) -> f64 {
        self.newest
    }

    /// Weight at lag `m` for a sample strictly inside the integration range.
    pub fn interior(&self, m: usize) -> f64 {
        self.interior[m]
    }

    /// Weight at lag `n` for the `t = 0` endpoint sample.
    pub fn oldest(&self, n: usize) -> f64 {
        self.oldest[n]
    }

    /// Weight of sample `j` in the convolution evaluated at level `n`.
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        debug_assert!(j <= n);
        if n == 0 {
            0.0
        } else if j == n {
            self.newest
        } else if j == 0 {
            self.oldest[n]
        } else {
            self.interior[n - j]
        }
    }

    /// Truncated to the first `len` levels.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        QuadratureWeights {
            dt: self.dt,
            newest: self.newest,
            interior: self.interior[..len].to_vec(),
            oldest: self.oldest[..len].to_vec(),
        }
    }
}

/// Convolution of a scalar series against precomputed weights.
pub fn convolve_with(weights: &QuadratureWeights, series: &[f64]) -> Result<Vec<f64>> {
    if series.len() > weights.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), got: series.len() });
    }
    let out = (0..series.len()).map(|n| (0..=n).map(|j| weights.weight(n, j) * series[j]).sum()).collect();
    Ok(out)
}

/// Trapezoidal product quadrature of `(h∗u)(t_n)` at every sample.
pub fn convolve(h: impl Fn(f64) -> f64, series: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::ParameterViolation("convolution step must be positive".into()));
    }
    let weights = QuadratureWeights::trapezoid_fn(h, dt, series.len());
    convolve_with(&weights, series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_exact() {
        let dt = 0.01;
        let out = convolve(|_| 1.0, &[1.0; 101], dt).unwrap();
        assert_eq!(out[0], 0.0);
        for (n, v) in out.iter().enumerate() {
            assert!((v - n as f64 * dt).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_against_analytic() {
        let dt = 1e-3;
        let out = convolve(|t| libm::exp(-t), &[1.0; 1001], dt).unwrap();
        assert!((out[1000] - (1.0 - libm::exp(-1.0))).abs() < 1e-6);
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let out = convolve(|_| 0.0, &[3.0, 1.0, -2.0], 0.1).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_mismatch() {
        let w = QuadratureWeights::trapezoid(&[1.0, 1.0], 0.1);
        assert!(matches!(convolve_with(&w, &[1.0; 3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn product_weights_integrate_kernel_exactly_for_constants() {
        // Σ weights = ∫_0^{t_n} h for f ≡ 1
        let dt = 0.05;
        let w = QuadratureWeights::product(|t| libm::exp(-t), dt, 41, None);
        let out = convolve_with(&w, &[1.0; 41]).unwrap();
        assert!((out[40] - (1.0 - libm::exp(-2.0))).abs() < 1e-13);
    }

    #[test]
    fn singular_product_weights() {
        // h(τ) = τ^{-1/2}; ∫_0^t τ^{-1/2} dτ = 2√t
        let dt = 0.1;
        let w = QuadratureWeights::product(|t| 1.0 / libm::sqrt(t), dt, 11, Some(0.5));
        let out = convolve_with(&w, &[1.0; 11]).unwrap();
        assert!((out[10] - 2.0).abs() < 1e-10, "{}", out[10]);
    }

    #[test]
    fn kernel_derivative_against_a_difference() {
        let k = MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap();
        for &dt in &[0.02, 0.01] {
            let n = (1.0 / dt) as usize;
            let w = QuadratureWeights::for_kernel(&k, Order::ADot, dt, n + 1);
            let out = convolve_with(&w, &vec![1.0; n + 1]).unwrap();
            let exact = k.a(1.0) - k.a(0.0);
            assert!((out[n] - exact).abs() < 0.2 * dt * dt, "dt={dt}");
        }
    }
}
