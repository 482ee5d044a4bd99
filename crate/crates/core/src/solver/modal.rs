//! Scalar resolvents on the sine eigenbasis and the mild-solution oracle.

use alloc::vec;
use alloc::vec::Vec;

use super::{InitialData, SolverConfig};
use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::kernels::{MemoryKernel, Order, QuadratureWeights};
use crate::nonlinearity::Nonlinearity;

/// Sampled solution of `r'' + μr + μ(ȧ∗r) = 0`, `r(0) = 1`, `r'(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalResolvent {
    pub mu: f64,
    pub dt: f64,
    pub r: Vec<f64>,
    /// `(1∗r)(t_n)` by cumulative trapezoid.
    pub int_r: Vec<f64>,
}

impl ModalResolvent {
    /// `max_t r² + (1-a(0))·μ·(1∗r)² - 1`.
    pub fn bound_excess(&self, a0: f64) -> f64 {
        self.r
            .iter()
            .zip(&self.int_r)
            .map(|(r, i)| r * r + (1.0 - a0) * self.mu * i * i - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn resolvent_with(mu: f64, weights: Option<&QuadratureWeights>, dt: f64, steps: usize) -> Result<ModalResolvent> {
    let mut r = Vec::with_capacity(steps + 1);
    r.push(1.0);
    if steps >= 1 {
        r.push(1.0 - 0.5 * dt * dt * mu);
    }
    for n in 1..steps {
        let mut mem = 0.0;
        if let Some(w) = weights {
            mem = w.oldest(n) * r[0] + w.newest() * r[n];
            for j in 1..n {
                mem += w.interior(n - j) * r[j];
            }
        }
        let next = 2.0 * r[n] - r[n - 1] - dt * dt * mu * (r[n] + mem);
        if !next.is_finite() {
            return Err(Error::NonFiniteField { step: n + 1 });
        }
        r.push(next);
    }
    let mut int_r = Vec::with_capacity(r.len());
    int_r.push(0.0);
    for n in 1..r.len() {
        let prev = int_r[n - 1];
        int_r.push(prev + 0.5 * dt * (r[n - 1] + r[n]));
    }
    Ok(ModalResolvent { mu, dt, r, int_r })
}

/// Solves the scalar resolvent equation with the leapfrog/trapezoid scheme
/// of the field solver.
pub fn modal_resolvent(mu: f64, kernel: &MemoryKernel, dt: f64, t_final: f64) -> Result<ModalResolvent> {
    if !(mu > 0.0) {
        return Err(Error::ParameterViolation("resolvent eigenvalue must be positive".into()));
    }
    let cfg = SolverConfig::new(dt, t_final);
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::ParameterViolation("resolvent needs dt > 0 and T >= 0".into()));
    }
    let steps = cfg.steps();
    let weights =
        if kernel.is_zero() { None } else { Some(QuadratureWeights::for_kernel(kernel, Order::ADot, dt, steps + 1)) };
    resolvent_with(mu, weights.as_ref(), dt, steps)
}

/// Mild solution expanded in the first `modes` discrete sine modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSolution {
    pub dt: f64,
    pub modes: Vec<(usize, usize)>,
    /// `coeffs[n][k]`: coefficient of mode `k` at `t_n`.
    pub coeffs: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Last ratio of successive Picard updates.
    pub contraction: f64,
    basis: Vec<Vec<f64>>,
}

impl ModalSolution {
    pub fn steps(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Field at time level `n`.
    pub fn field(&self, n: usize) -> Vec<f64> {
        reconstruct(&self.basis, &self.coeffs[n])
    }
}

fn reconstruct(basis: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis.first().map_or(0, |b| b.len())];
    for (b, &ck) in basis.iter().zip(c) {
        for (o, v) in out.iter_mut().zip(b) {
            *o += ck * v;
        }
    }
    out
}

/// Picard iteration of
/// `u(t) = R(t)u₀ + ∫_0^t R(τ)u₁ dτ + ∫_0^t (1∗R)(t-τ) g(u(τ)) dτ`
/// on the discrete sine basis, with `g` applied to the reconstructed field
/// and re-projected each sweep.
pub fn mild_solution_modal(
    grid: &Grid,
    kernel: &MemoryKernel,
    nl: &Nonlinearity,
    ic: &InitialData,
    modes: usize,
    dt: f64,
    t_final: f64,
    picard_iters: usize,
) -> Result<ModalSolution> {
    ic.validate(grid)?;
    if modes == 0 || modes > grid.interior_len() {
        return Err(Error::ParameterViolation("mode count must be between 1 and the interior size".into()));
    }
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::ParameterViolation("modal solution needs dt > 0 and T >= 0".into()));
    }
    let steps = SolverConfig::new(dt, t_final).steps();
    let index = grid.mode_indices(modes);
    let basis: Vec<Vec<f64>> = index.iter().map(|&(k, l)| grid.sine_mode(k, l)).collect();
    let weights =
        if kernel.is_zero() { None } else { Some(QuadratureWeights::for_kernel(kernel, Order::ADot, dt, steps + 1)) };
    let resolvents: Vec<ModalResolvent> = index
        .iter()
        .map(|&(k, l)| resolvent_with(grid.discrete_eigenvalue(k, l), weights.as_ref(), dt, steps))
        .collect::<Result<_>>()?;
    let a: Vec<f64> = basis.iter().map(|b| grid.inner(&ic.u0, b)).collect();
    let b: Vec<f64> = basis.iter().map(|b| grid.inner(&ic.u1, b)).collect();
    let m = basis.len();

    // linear part, stored mode-major for the convolution sweeps
    let mut linear = vec![vec![0.0; steps + 1]; m];
    for k in 0..m {
        for n in 0..=steps {
            linear[k][n] = resolvents[k].r[n] * a[k] + resolvents[k].int_r[n] * b[k];
        }
    }
    let mut current = linear.clone();
    let mut iterations = 0;
    let mut contraction = 0.0;
    let mut last_diff = f64::NAN;
    let tol = 1e-10;
    let mut gu = vec![0.0; grid.interior_len()];
    let mut gamma = vec![vec![0.0; steps + 1]; m];
    loop {
        iterations += 1;
        if nl.is_zero() {
            break;
        }
        for n in 0..=steps {
            let c: Vec<f64> = (0..m).map(|k| current[k][n]).collect();
            let u = reconstruct(&basis, &c);
            nl.apply(&u, &mut gu);
            for k in 0..m {
                gamma[k][n] = grid.inner(&gu, &basis[k]);
            }
        }
        let mut next = linear.clone();
        for k in 0..m {
            let kern = &resolvents[k].int_r;
            let gk = &gamma[k];
            let out = &mut next[k];
            // trapezoid in τ; the τ = t end carries (1∗r)(0) = 0
            for n in 1..=steps {
                let mut s = 0.5 * kern[n] * gk[0];
                let body = &kern[1..n];
                let g_rev = &gk[1..n];
                for (i, kv) in body.iter().enumerate() {
                    s += kv * g_rev[n - 2 - i];
                }
                out[n] += dt * s;
            }
        }
        let mut diff: f64 = 0.0;
        for n in 0..=steps {
            let d2: f64 = (0..m).map(|k| (next[k][n] - current[k][n]) * (next[k][n] - current[k][n])).sum();
            diff = diff.max(d2);
        }
        let diff = libm::sqrt(diff);
        if last_diff.is_finite() && last_diff > 0.0 {
            contraction = diff / last_diff;
        }
        last_diff = diff;
        current = next;
        if diff < tol {
            break;
        }
        if iterations >= picard_iters {
            return Err(Error::NoConvergence { iterations, ratio: contraction });
        }
    }
    let coeffs = (0..=steps).map(|n| (0..m).map(|k| current[k][n]).collect()).collect();
    Ok(ModalSolution { dt, modes: index, coeffs, iterations, contraction, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn free_oscillator() {
        let dt = 1e-3;
        let r = modal_resolvent(PI * PI, &MemoryKernel::zero(), dt, 2.0).unwrap();
        assert_eq!(r.r[0], 1.0);
        assert_eq!(r.int_r[0], 0.0);
        for n in (0..r.r.len()).step_by(100) {
            let t = n as f64 * dt;
            assert!((r.r[n] - libm::cos(PI * t)).abs() < 1e-5);
            assert!((r.int_r[n] - libm::sin(PI * t) / PI).abs() < 1e-5);
        }
    }

    #[test]
    fn dissipative_bound() {
        let k = MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap();
        let r = modal_resolvent(PI * PI, &k, 1e-3, 10.0).unwrap();
        assert!(r.bound_excess(k.a(0.0)) <= 1e-6);
    }

    #[test]
    fn linear_modal_matches_eigenmode() {
        let grid = Grid::interval(1.0, 41).unwrap();
        let ic = InitialData::eigenmode(&grid, 1, 0).unwrap();
        let dt = 1e-3;
        let sol =
            mild_solution_modal(&grid, &MemoryKernel::zero(), &Nonlinearity::zero(1), &ic, 8, dt, 1.0, 50).unwrap();
        assert_eq!(sol.iterations, 1);
        let mu = grid.discrete_eigenvalue(1, 0);
        let u = sol.field(1000);
        for (x, u0) in u.iter().zip(&ic.u0) {
            assert!((x - u0 * libm::cos(libm::sqrt(mu))).abs() < 1e-6);
        }
    }

    #[test]
    fn picard_failure_reported() {
        let grid = Grid::interval(1.0, 21).unwrap();
        let ic = InitialData::eigenmode(&grid, 1, 0).unwrap();
        let nl = Nonlinearity::sine(1.0, 1).unwrap();
        let r = mild_solution_modal(&grid, &MemoryKernel::zero(), &nl, &ic, 4, 1e-2, 1.0, 2);
        assert!(matches!(r, Err(Error::NoConvergence { iterations: 2, .. })));
    }
}
