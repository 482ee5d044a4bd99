//! Energy functionals along a trajectory and the checks built on them.
//!
//! Kinetic and gradient terms are averaged over the two staggered half
//! steps around each record, which makes the memory-free leapfrog energy an
//! exact discrete invariant. Memory integrals use the trapezoid rule at the
//! record cadence.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::kernels::{MemoryKernel, Order, QuadratureWeights};
use crate::nonlinearity::Nonlinearity;
use crate::solver::{Snapshot, Trajectory};

/// Energy time series, one entry per record.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    /// `½‖u_t‖²`
    pub kinetic: Vec<f64>,
    /// `(1-a(0))/2 ‖∇u‖²`
    pub pot_simple: Vec<f64>,
    /// `(1-a(0)+a(t))/2 ‖∇u‖²`
    pub pot_history: Vec<f64>,
    /// `-½ ∫_0^t ȧ(t-s) ‖∇u(s) - ∇u(t)‖² ds`
    pub history_term: Vec<f64>,
    /// `∫_Ω G(u)`
    pub g_int: Vec<f64>,
    pub e_simple: Vec<f64>,
    pub e_history: Vec<f64>,
    /// `∫_0^t ⟨a∗∇u_t, ∇u_t⟩ ds`
    pub memory_dissipation: Vec<f64>,
    /// `½ȧ(t)‖∇u‖² - ½∫_0^t ä(t-s)‖∇u(s) - ∇u(t)‖² ds`
    pub dissipation_rate: Vec<f64>,
    /// Collocated `‖∇u(t)‖²`.
    pub grad_sq: Vec<f64>,
    /// Staggered `‖∇u‖²` used in the potentials.
    pub grad_sq_staggered: Vec<f64>,
    /// `⟨∇u₀, ∇u(t)⟩`
    pub grad_cross0: Vec<f64>,
    /// `‖u₁‖² + ‖∇u₀‖²`
    pub data_norm: f64,
    pub a0: f64,
    pub record_dt: f64,
    /// The solver discarded history older than its window.
    pub history_truncated: bool,
}

impl EnergyReport {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn neg_laplacian(grid: &Grid, u: &[f64]) -> Result<Vec<f64>> {
    let mut l = grid.apply_laplacian(u)?;
    for v in l.iter_mut() {
        *v = -*v;
    }
    Ok(l)
}

fn g_integral(grid: &Grid, nl: &Nonlinearity, u: &[f64]) -> f64 {
    if nl.is_zero() {
        return 0.0;
    }
    grid.cell_volume() * u.iter().map(|&x| nl.G(x)).sum::<f64>()
}

fn kinetic_of(grid: &Grid, snap: &Snapshot, dt: f64) -> f64 {
    let fwd: Vec<f64> = snap.u_next.iter().zip(&snap.u).map(|(a, b)| (a - b) / dt).collect();
    let bwd: Vec<f64> = snap.u.iter().zip(&snap.u_prev).map(|(a, b)| (a - b) / dt).collect();
    0.25 * (grid.norm_sq(&fwd) + grid.norm_sq(&bwd))
}

fn staggered_grad(grid: &Grid, neg_lap_u: &[f64], snap: &Snapshot) -> f64 {
    let sum: Vec<f64> = snap.u_next.iter().zip(&snap.u_prev).map(|(a, b)| a + b).collect();
    0.5 * grid.inner(neg_lap_u, &sum)
}

/// `E(t) = ½‖u_t‖² + (1-a(0))/2 ‖∇u‖² - ∫G(u)` at one record.
pub fn energy_simple(snap: &Snapshot, dt: f64, grid: &Grid, kernel: &MemoryKernel, nl: &Nonlinearity) -> Result<f64> {
    let nl_u = neg_laplacian(grid, &snap.u)?;
    let grad = staggered_grad(grid, &nl_u, snap);
    Ok(kinetic_of(grid, snap, dt) + 0.5 * (1.0 - kernel.a(0.0)) * grad - g_integral(grid, nl, &snap.u))
}

/// History energy at record `r`, using records `0..=r` for the memory term.
pub fn energy_history(
    traj: &Trajectory,
    r: usize,
    grid: &Grid,
    kernel: &MemoryKernel,
    nl: &Nonlinearity,
) -> Result<f64> {
    let snaps = traj.snapshots.get(..=r).ok_or(Error::LengthMismatch { expected: traj.len(), got: r + 1 })?;
    let sub = Trajectory { snapshots: snaps.to_vec(), ..traj.clone() };
    let report = energy_report(&sub, grid, kernel, nl)?;
    Ok(report.e_history[r])
}

/// Evaluates every energy series along the trajectory.
///
/// Cost is quadratic in the number of records.
pub fn energy_report(traj: &Trajectory, grid: &Grid, kernel: &MemoryKernel, nl: &Nonlinearity) -> Result<EnergyReport> {
    let snaps = &traj.snapshots;
    let rec = snaps.len();
    if rec == 0 {
        return Err(Error::DegenerateData("trajectory has no records".into()));
    }
    let dt = traj.dt;
    let step = traj.record_dt();
    let a0 = kernel.a(0.0);
    let memory = !kernel.is_zero();

    let neg_lap_u: Vec<Vec<f64>> = snaps.iter().map(|s| neg_laplacian(grid, &s.u)).collect::<Result<_>>()?;
    let vel: Vec<Vec<f64>> = snaps.iter().map(|s| s.velocity(dt)).collect();
    let neg_lap_v: Vec<Vec<f64>> =
        if memory { vel.iter().map(|v| neg_laplacian(grid, v)).collect::<Result<_>>()? } else { Vec::new() };
    let grad_sq: Vec<f64> = snaps.iter().zip(&neg_lap_u).map(|(s, l)| grid.inner(l, &s.u)).collect();

    let (w_dot, w_a, w_ddot) = if memory {
        let w_dot = QuadratureWeights::for_kernel(kernel, Order::ADot, step, rec);
        let w_a = QuadratureWeights::for_kernel(kernel, Order::A, step, rec);
        // the lag-0 sample multiplies a vanishing difference; keep it finite
        let mut ddot: Vec<f64> = (0..rec).map(|k| kernel.a_ddot(k as f64 * step)).collect();
        ddot[0] = 0.0;
        (Some(w_dot), Some(w_a), Some(QuadratureWeights::trapezoid(&ddot, step)))
    } else {
        (None, None, None)
    };

    let mut out = EnergyReport {
        times: snaps.iter().map(|s| s.t).collect(),
        kinetic: Vec::with_capacity(rec),
        pot_simple: Vec::with_capacity(rec),
        pot_history: Vec::with_capacity(rec),
        history_term: Vec::with_capacity(rec),
        g_int: Vec::with_capacity(rec),
        e_simple: Vec::with_capacity(rec),
        e_history: Vec::with_capacity(rec),
        memory_dissipation: Vec::with_capacity(rec),
        dissipation_rate: Vec::with_capacity(rec),
        grad_sq: grad_sq.clone(),
        grad_sq_staggered: Vec::with_capacity(rec),
        grad_cross0: Vec::with_capacity(rec),
        data_norm: grid.norm_sq(&traj.u1) + grid.gradient_norm_sq(&traj.u0)?,
        a0,
        record_dt: step,
        history_truncated: traj.history_window.is_some(),
    };
    let mut md_prev_integrand = 0.0;
    let mut md = 0.0;
    let mut cross = vec![0.0; rec];
    for r in 0..rec {
        let s = &snaps[r];
        let t = s.t;
        let kinetic = kinetic_of(grid, s, dt);
        let stag = staggered_grad(grid, &neg_lap_u[r], s);
        let g_int = g_integral(grid, nl, &s.u);
        for j in 0..=r {
            cross[j] = grid.inner(&neg_lap_u[j], &s.u);
        }
        let (mut hist, mut rate, mut md_integrand) = (0.0, 0.0, 0.0);
        if let (Some(wd), Some(wa), Some(wdd)) = (&w_dot, &w_a, &w_ddot) {
            for j in 0..r {
                let diff = grad_sq[j] + grad_sq[r] - 2.0 * cross[j];
                hist += wd.weight(r, j) * diff;
                rate += wdd.weight(r, j) * diff;
            }
            hist *= -0.5;
            rate = 0.5 * kernel.a_dot(t) * grad_sq[r] - 0.5 * rate;
            for j in 0..=r {
                md_integrand += wa.weight(r, j) * grid.inner(&neg_lap_v[j], &vel[r]);
            }
            if r > 0 {
                md += 0.5 * step * (md_prev_integrand + md_integrand);
            }
            md_prev_integrand = md_integrand;
        }
        let pot_simple = 0.5 * (1.0 - a0) * stag;
        let pot_history = 0.5 * (1.0 - a0 + kernel.a(t)) * stag;
        out.kinetic.push(kinetic);
        out.pot_simple.push(pot_simple);
        out.pot_history.push(pot_history);
        out.history_term.push(hist);
        out.g_int.push(g_int);
        out.e_simple.push(kinetic + pot_simple - g_int);
        out.e_history.push(kinetic + pot_history + hist - g_int);
        out.memory_dissipation.push(md);
        out.dissipation_rate.push(rate);
        out.grad_sq_staggered.push(stag);
        out.grad_cross0.push(cross[0]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    /// Largest increase between consecutive records.
    pub max_increase: f64,
    pub tolerance: f64,
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub passed: bool,
}

/// Flags increases larger than `tol_rel·|E(0)|` between consecutive records.
pub fn check_monotone(series: &[f64], tol_rel: f64) -> MonotoneReport {
    let tolerance = tol_rel * series.first().map_or(0.0, |e| e.abs());
    let mut max_increase = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut first_violation = None;
    for (i, w) in series.windows(2).enumerate() {
        let inc = w[1] - w[0];
        max_increase = max_increase.max(inc);
        if inc > tolerance {
            violations += 1;
            first_violation.get_or_insert(i + 1);
        }
    }
    if series.len() < 2 {
        max_increase = 0.0;
    }
    MonotoneReport { max_increase, tolerance, violations, first_violation, passed: violations == 0 }
}

/// Max over interior records of `|(E_{r+1}-E_{r-1})/2Δ - E'(t_r)|` with
/// `E'` from the dissipation formula.
pub fn derivative_residual(report: &EnergyReport) -> f64 {
    let e = &report.e_history;
    let step = report.record_dt;
    (1..e.len().saturating_sub(1))
        .map(|r| ((e[r + 1] - e[r - 1]) / (2.0 * step) - report.dissipation_rate[r]).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub max_residual: f64,
}

/// Both sides of
/// `E(t) + ∫_0^t⟨a∗∇u_t, ∇u_t⟩ = E(0) + a(0)‖∇u₀‖² - a(t)⟨∇u₀, ∇u(t)⟩ + ∫_0^t ȧ(s)⟨∇u₀, ∇u(s)⟩ ds`,
/// the sign of the last term following from integrating `a(s)·d/ds⟨∇u₀, ∇u(s)⟩`
/// by parts.
pub fn check_strong_energy_identity(report: &EnergyReport, kernel: &MemoryKernel) -> IdentityResidual {
    let rec = report.len();
    let step = report.record_dt;
    let w = (!kernel.is_zero()).then(|| QuadratureWeights::for_kernel(kernel, Order::ADot, step, rec.max(1)));
    let e0 = report.e_simple[0];
    let g00 = report.grad_sq[0];
    let mut lhs = Vec::with_capacity(rec);
    let mut rhs = Vec::with_capacity(rec);
    let mut max_residual: f64 = 0.0;
    for r in 0..rec {
        let l = report.e_simple[r] + report.memory_dissipation[r];
        let mut rr = e0;
        if let Some(w) = &w {
            // ∫ ȧ(τ) f(τ) dτ as a convolution against the reversed series
            let integral: f64 = (0..=r).map(|j| w.weight(r, j) * report.grad_cross0[r - j]).sum();
            rr += report.a0 * g00 - kernel.a(report.times[r]) * report.grad_cross0[r] + integral;
        }
        max_residual = max_residual.max((l - rr).abs());
        lhs.push(l);
        rhs.push(rr);
    }
    IdentityResidual { lhs, rhs, max_residual }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub coercivity_c: f64,
    /// `C₀ ≥ λ(1-a(0))/2`: the pointwise check is informational only.
    pub informational: bool,
    /// Smallest `E - ½‖u_t‖² - C/2‖∇u‖²` over the records.
    pub min_margin: f64,
    /// Every margin is above minus the staggered/collocated gradient gap.
    pub coercivity_pass: bool,
    /// `sup_t E(t) / (‖u₁‖² + ‖∇u₀‖²)`, 0 for zero data.
    pub bound_313: f64,
    /// `sup_t ∫_0^t⟨a∗∇u_t, ∇u_t⟩`.
    pub dissipation_sup: f64,
}

pub fn check_coercivity_and_bounds(report: &EnergyReport, lambda: f64, c0: f64) -> CoercivityReport {
    let small = crate::nonlinearity::smallness_with_c0(c0, report.a0, lambda);
    let c = small.coercivity_c;
    let scale = report.e_simple.iter().chain(&report.kinetic).map(|v| v.abs()).fold(0.0, f64::max);
    let margin = |r: usize| report.e_simple[r] - report.kinetic[r] - 0.5 * c * report.grad_sq_staggered[r];
    let min_margin = (0..report.len()).map(margin).fold(f64::INFINITY, f64::min);
    // the potential sits on the staggered gradient, the Poincaré step on the
    // collocated one; their gap is O(dt²) and matters only in the tight case
    let slack = |r: usize| 0.5 * (report.grad_sq[r] - report.grad_sq_staggered[r]).abs();
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let coercivity_pass = (0..report.len()).all(|r| margin(r) >= -(slack(r) + floor));
    let bound_313 = if report.data_norm > 0.0 {
        report.e_simple.iter().fold(0.0f64, |m, e| m.max(*e)) / report.data_norm
    } else {
        0.0
    };
    CoercivityReport {
        coercivity_c: c,
        informational: !small.passed,
        min_margin,
        coercivity_pass,
        bound_313,
        dissipation_sup: report.memory_dissipation.iter().copied().fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedEnergy {
    /// `sup_t ∫_0^t E / E(0)`.
    pub c0: f64,
    /// The running sup changed by less than 1% over the last tenth of the horizon.
    pub is_uniform: bool,
}

/// Empirical constant of `∫_0^t E(s) ds ≤ c₀ E(0)`.
pub fn check_integrated_energy(series: &[f64], dt: f64) -> Result<IntegratedEnergy> {
    let e0 = *series.first().ok_or_else(|| Error::DegenerateData("empty energy series".into()))?;
    if e0 == 0.0 {
        return Err(Error::DegenerateData("E(0) = 0".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::ParameterViolation(format!("record spacing must be positive, got {dt}")));
    }
    let mut integral = 0.0;
    let mut sup: f64 = 0.0;
    let mut running = Vec::with_capacity(series.len());
    running.push(0.0);
    for w in series.windows(2) {
        integral += 0.5 * dt * (w[0] + w[1]);
        sup = sup.max(integral / e0);
        running.push(sup);
    }
    let last = *running.last().unwrap_or(&0.0);
    let idx = libm::floor(0.9 * (running.len() - 1) as f64) as usize;
    let earlier = running[idx];
    let is_uniform = last > 0.0 && (last - earlier) <= 0.01 * last;
    Ok(IntegratedEnergy { c0: sup, is_uniform })
}
