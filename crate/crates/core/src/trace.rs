//! Boundary traces, hidden-regularity quantities and the multiplier identity.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::EnergyReport;
use crate::domain::{BoundaryNode, Grid, MultiplierField};
use crate::error::{Error, Result};
use crate::kernels::{convolve_with, volterra_solve_with, MemoryKernel, Order, QuadratureWeights};
use crate::nonlinearity::Nonlinearity;
use crate::solver::Trajectory;

/// `∂_ν u` and `∂_ν u + ȧ∗∂_ν u` per boundary node at the record times.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    pub times: Vec<f64>,
    pub record_dt: f64,
    pub nodes: Vec<BoundaryNode>,
    /// `raw[b][r]`
    pub raw: Vec<Vec<f64>>,
    /// `convolved[b][r]`
    pub convolved: Vec<Vec<f64>>,
}

impl TraceSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|b| b.weight)
    }
}

fn record_weights(kernel: &MemoryKernel, order: Order, step: f64, len: usize) -> Option<QuadratureWeights> {
    (!kernel.is_zero()).then(|| QuadratureWeights::for_kernel(kernel, order, step, len.max(1)))
}

/// Extracts `∂_ν u` at every boundary node and record and convolves each
/// node series with `ȧ` at the record cadence.
pub fn extract_trace(traj: &Trajectory, grid: &Grid, kernel: &MemoryKernel) -> Result<TraceSeries> {
    let rec = traj.len();
    let nb = grid.boundary_nodes().len();
    let mut raw = vec![Vec::with_capacity(rec); nb];
    for s in &traj.snapshots {
        let d = grid.boundary_normal_derivative(&s.u)?;
        for (series, v) in raw.iter_mut().zip(d) {
            series.push(v);
        }
    }
    let step = traj.record_dt();
    let convolved = match record_weights(kernel, Order::ADot, step, rec) {
        None => raw.clone(),
        Some(w) => raw
            .iter()
            .map(|phi| {
                let c = convolve_with(&w, phi)?;
                Ok(phi.iter().zip(c).map(|(p, c)| p + c).collect())
            })
            .collect::<Result<_>>()?,
    };
    Ok(TraceSeries { times: traj.times(), record_dt: step, nodes: grid.boundary_nodes().to_vec(), raw, convolved })
}

/// Trapezoid in time over `[0, T]` of `Σ_b w_b f_b(t)²`, interpolating
/// linearly inside the last partial interval.
fn boundary_time_integral(trace: &TraceSeries, series: &[Vec<f64>], t_end: f64) -> Result<f64> {
    let horizon = trace.horizon();
    let slack = 1e-9 * trace.record_dt.max(horizon);
    if !(t_end >= 0.0) || t_end > horizon + slack {
        return Err(Error::ParameterViolation(format!("T = {t_end} outside the trace horizon [0, {horizon}]")));
    }
    let density = |r: usize| -> f64 { trace.nodes.iter().zip(series).map(|(b, f)| b.weight * f[r] * f[r]).sum() };
    let step = trace.record_dt;
    let mut total = 0.0;
    let mut prev = density(0);
    for r in 1..trace.len() {
        let cur = density(r);
        let (t0, t1) = (trace.times[r - 1], trace.times[r]);
        if t1 <= t_end + slack {
            total += 0.5 * step * (prev + cur);
        } else {
            let frac = (t_end - t0) / (t1 - t0);
            let mid = prev + frac * (cur - prev);
            total += 0.5 * (t_end - t0) * (prev + mid);
            break;
        }
        prev = cur;
    }
    Ok(total)
}

/// `∫_0^T ∫_Γ |∂_ν u + ȧ∗∂_ν u|²`.
pub fn hidden_quantity(trace: &TraceSeries, t_end: f64) -> Result<f64> {
    boundary_time_integral(trace, &trace.convolved, t_end)
}

/// `∫_0^T ∫_Γ |∂_ν u|²` from the raw series.
pub fn raw_quantity(trace: &TraceSeries, t_end: f64) -> Result<f64> {
    boundary_time_integral(trace, &trace.raw, t_end)
}

/// Recovers `∂_ν u` from the convolved series by solving
/// `φ + ȧ∗φ = ψ` per node under the extraction quadrature.
pub fn deconvolve_trace(trace: &TraceSeries, kernel: &MemoryKernel) -> Result<TraceSeries> {
    let raw = match record_weights(kernel, Order::ADot, trace.record_dt, trace.len()) {
        None => trace.convolved.clone(),
        Some(w) => trace.convolved.iter().map(|psi| volterra_solve_with(&w, psi)).collect::<Result<_>>()?,
    };
    Ok(TraceSeries { raw, ..trace.clone() })
}

/// One member of a direct-inequality family.
#[derive(Debug, Clone)]
pub struct TraceRun {
    pub trace: TraceSeries,
    pub energy: EnergyReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRatio {
    pub hidden: f64,
    /// `∫∫|∂_ν u|²` after deconvolution.
    pub raw: f64,
    /// `‖∇u₀‖² + ‖u₁‖²`
    pub data_norm: f64,
    pub ratio: f64,
    pub raw_ratio: f64,
    /// `∫_0^T E + E(0)`
    pub energy_bound: f64,
    /// `hidden / (∫_0^T E + E(0))`
    pub energy_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectInequalityReport {
    pub runs: Vec<RunRatio>,
    /// Empirical `c₀(T)` for the convolved trace.
    pub max_ratio: f64,
    pub max_raw_ratio: f64,
    pub max_energy_ratio: f64,
}

fn energy_integral(report: &EnergyReport, t_end: f64) -> f64 {
    let e = &report.e_history;
    let mut total = 0.0;
    for r in 1..e.len() {
        let (t0, t1) = (report.times[r - 1], report.times[r]);
        if t1 <= t_end + 1e-12 {
            total += 0.5 * (t1 - t0) * (e[r - 1] + e[r]);
        } else {
            let mid = e[r - 1] + (t_end - t0) / (t1 - t0) * (e[r] - e[r - 1]);
            total += 0.5 * (t_end - t0) * (e[r - 1] + mid);
            break;
        }
    }
    total
}

/// Ratios of the boundary quantities to the data norm across a family of
/// runs sharing grid, kernel and nonlinearity.
pub fn direct_inequality_report(
    runs: &[TraceRun],
    kernel: &MemoryKernel,
    t_end: f64,
) -> Result<DirectInequalityReport> {
    if runs.is_empty() {
        return Err(Error::ParameterViolation("direct inequality needs at least one run".into()));
    }
    let mut out = Vec::with_capacity(runs.len());
    for (i, run) in runs.iter().enumerate() {
        let data_norm = run.energy.data_norm;
        if !(data_norm > 0.0) {
            return Err(Error::DegenerateData(format!("run {i} has zero initial data")));
        }
        let hidden = hidden_quantity(&run.trace, t_end)?;
        let raw = raw_quantity(&deconvolve_trace(&run.trace, kernel)?, t_end)?;
        let energy_bound = energy_integral(&run.energy, t_end) + run.energy.e_history[0];
        out.push(RunRatio {
            hidden,
            raw,
            data_norm,
            ratio: hidden / data_norm,
            raw_ratio: raw / data_norm,
            energy_bound,
            energy_ratio: if energy_bound > 0.0 { hidden / energy_bound } else { f64::INFINITY },
        });
    }
    let max = |f: fn(&RunRatio) -> f64| out.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    Ok(DirectInequalityReport {
        max_ratio: max(|r| r.ratio),
        max_raw_ratio: max(|r| r.raw_ratio),
        max_energy_ratio: max(|r| r.energy_ratio),
        runs: out,
    })
}

/// Names of the right-hand-side terms in ledger order.
pub const IDENTITY_TERMS: [&str; 7] =
    ["bracket", "div_h_ut2", "addot_history", "adot_ut_grad", "jacobian_grad_w", "div_h_grad_w2", "nonlinear"];

/// Both sides of the multiplier identity on `[S, T]`, with `w = u + ȧ∗u`:
///
/// `∫∫_Γ [2∂_ν w h·∇w - h·ν|∇w|² + h·ν u_t²]`
/// `= 2[∫ u_t h·∇w]_S^T + ∫∫ div h u_t² - 2∫∫ u_t h·∫ä(t-s)(∇u(s)-∇u(t))ds`
/// `- 2∫ȧ(t)∫u_t h·∇u + 2∫∫ ∂_i h_j ∂_i w ∂_j w - ∫∫ div h |∇w|² - 2∫∫ g(u) h·∇w`.
///
/// The nonlinear term enters with a minus sign: it comes from `u_tt = Δw + g(u)`
/// multiplied by `2h·∇w`, with `2∫∫ g h·∇w` moved to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityLedger {
    pub s: f64,
    pub t: f64,
    /// Full boundary integrand.
    pub lhs: f64,
    /// `∫∫_Γ |∂_ν w|²`, the form the boundary integrand takes when `u = 0` on Γ and `h·ν = 1`.
    pub lhs_reduced: f64,
    /// Ordered as [`IDENTITY_TERMS`].
    pub terms: [f64; 7],
    pub residual: f64,
}

impl IdentityLedger {
    pub fn rhs(&self) -> f64 {
        self.terms.iter().sum()
    }
}

struct RecordTerms {
    boundary_full: f64,
    boundary_reduced: f64,
    bracket: f64,
    ut2: f64,
    addot: f64,
    adot: f64,
    jac: f64,
    grad_w2: f64,
    nonlinear: f64,
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Evaluates the multiplier identity along a full-history trajectory.
/// `S` and `T` are rounded to the nearest records.
pub fn multiplier_identity_residual(
    traj: &Trajectory,
    grid: &Grid,
    kernel: &MemoryKernel,
    nl: &Nonlinearity,
    hfield: &MultiplierField,
    s: f64,
    t: f64,
) -> Result<IdentityLedger> {
    if traj.history_window.is_some() {
        return Err(Error::HistoryTruncated("the multiplier identity needs the full history".into()));
    }
    let rec = traj.len();
    if rec < 2 {
        return Err(Error::DegenerateData("identity needs at least two records".into()));
    }
    let full_len = grid.full_len();
    if hfield.values.len() != full_len || hfield.boundary_values.len() != grid.boundary_nodes().len() {
        return Err(Error::SizeMismatch { expected: full_len, got: hfield.values.len() });
    }
    let step = traj.record_dt();
    let horizon = traj.snapshots[rec - 1].t;
    if !(0.0 <= s && s < t && t <= horizon + 1e-9 * horizon.max(1.0)) {
        return Err(Error::ParameterViolation(format!("need 0 <= S < T <= {horizon}, got S = {s}, T = {t}")));
    }
    let idx = |time: f64| -> usize { (libm::round(time / step) as usize).min(rec - 1) };
    let (rs, rt) = (idx(s), idx(t));
    if rs >= rt {
        return Err(Error::ParameterViolation("S and T fall on the same record".into()));
    }

    let dt = traj.dt;
    let u_full: Vec<Vec<f64>> = traj.snapshots.iter().map(|sn| grid.to_full(&sn.u)).collect();
    let grad_u: Vec<Vec<[f64; 2]>> = u_full.iter().map(|u| grid.nodal_gradient(u)).collect();
    let w_adot = record_weights(kernel, Order::ADot, step, rec);
    let w_addot = (!kernel.is_zero()).then(|| {
        let mut samples: Vec<f64> = (0..rec).map(|k| kernel.a_ddot(k as f64 * step)).collect();
        samples[0] = 0.0;
        QuadratureWeights::trapezoid(&samples, step)
    });
    let area = grid.area_weights();
    let div = hfield.divergence();
    let jac = hfield.jacobian;
    let mut gu_int = vec![0.0; grid.interior_len()];

    let terms_at = |r: usize, gu_int: &mut Vec<f64>| -> RecordTerms {
        let mut w = u_full[r].clone();
        if let Some(wd) = &w_adot {
            for j in 0..=r {
                let c = wd.weight(r, j);
                if c != 0.0 {
                    for (wi, uj) in w.iter_mut().zip(&u_full[j]) {
                        *wi += c * uj;
                    }
                }
            }
        }
        let grad_w = grid.nodal_gradient(&w);
        let v = grid.to_full(&traj.snapshots[r].velocity(dt));
        nl.apply(&traj.snapshots[r].u, gu_int);
        let g = grid.to_full(gu_int);

        // boundary integrand
        let dn_w = grid.boundary_normal_derivative_full(&w);
        let (mut boundary_full, mut boundary_reduced) = (0.0, 0.0);
        for (k, b) in grid.boundary_nodes().iter().enumerate() {
            let node = b.node[1] * grid.nodes()[0] + b.node[0];
            let h = hfield.boundary_values[k];
            let hn = dot2(h, b.normal);
            let gw = grad_w[node];
            let vt = v[node];
            boundary_full += b.weight * (2.0 * dn_w[k] * dot2(h, gw) - hn * dot2(gw, gw) + hn * vt * vt);
            boundary_reduced += b.weight * dn_w[k] * dn_w[k];
        }

        let mut out = RecordTerms {
            boundary_full,
            boundary_reduced,
            bracket: 0.0,
            ut2: 0.0,
            addot: 0.0,
            adot: 0.0,
            jac: 0.0,
            grad_w2: 0.0,
            nonlinear: 0.0,
        };
        let adot_t = if kernel.is_zero() { 0.0 } else { kernel.a_dot(traj.snapshots[r].t) };
        for p in 0..full_len {
            let wt = area[p];
            if wt == 0.0 {
                continue;
            }
            let h = hfield.values[p];
            let gw = grad_w[p];
            let gu = grad_u[r][p];
            let vp = v[p];
            let h_gw = dot2(h, gw);
            out.bracket += wt * vp * h_gw;
            out.ut2 += wt * vp * vp;
            out.adot += wt * vp * dot2(h, gu);
            let mut q = 0.0;
            for i in 0..2 {
                for jj in 0..2 {
                    q += jac[i][jj] * gw[i] * gw[jj];
                }
            }
            out.jac += wt * q;
            out.grad_w2 += wt * dot2(gw, gw);
            out.nonlinear += wt * g[p] * h_gw;
            if let Some(wdd) = &w_addot {
                let mut hist = [0.0; 2];
                for j in 0..r {
                    let c = wdd.weight(r, j);
                    hist[0] += c * (grad_u[j][p][0] - gu[0]);
                    hist[1] += c * (grad_u[j][p][1] - gu[1]);
                }
                out.addot += wt * vp * dot2(h, hist);
            }
        }
        out.adot *= adot_t;
        out
    };

    let mut lhs = 0.0;
    let mut lhs_reduced = 0.0;
    let mut terms = [0.0; 7];
    let mut bracket_s = 0.0;
    let mut bracket_t = 0.0;
    for r in rs..=rt {
        let rt_terms = terms_at(r, &mut gu_int);
        let c = if r == rs || r == rt { 0.5 * step } else { step };
        if r == rs {
            bracket_s = rt_terms.bracket;
        }
        if r == rt {
            bracket_t = rt_terms.bracket;
        }
        lhs += c * rt_terms.boundary_full;
        lhs_reduced += c * rt_terms.boundary_reduced;
        terms[1] += c * div * rt_terms.ut2;
        terms[2] += c * -2.0 * rt_terms.addot;
        terms[3] += c * -2.0 * rt_terms.adot;
        terms[4] += c * 2.0 * rt_terms.jac;
        terms[5] += c * -div * rt_terms.grad_w2;
        terms[6] += c * -2.0 * rt_terms.nonlinear;
    }
    terms[0] = 2.0 * (bracket_t - bracket_s);
    let residual = lhs - terms.iter().sum::<f64>();
    Ok(IdentityLedger { s: traj.snapshots[rs].t, t: traj.snapshots[rt].t, lhs, lhs_reduced, terms, residual })
}
