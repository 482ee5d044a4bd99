use alloc::vec::Vec;

use super::Trajectory;
use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::kernels::{MemoryKernel, Order, QuadratureWeights};
use crate::nonlinearity::Nonlinearity;

#[derive(Debug, Clone, PartialEq)]
pub struct WeakFormReport {
    /// Max over interior records of the residual, per test field.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Residual of
/// `d/dt ⟨u_t, v⟩ = -⟨∇u, ∇v⟩ - ∫_0^t ȧ(t-s)⟨∇u(s), ∇v⟩ ds + ⟨g(u), v⟩`
/// along a stored trajectory. `test_fields` empty means the first five
/// sine modes.
pub fn check_weak_form(
    traj: &Trajectory,
    grid: &Grid,
    kernel: &MemoryKernel,
    nl: &Nonlinearity,
    test_fields: &[Vec<f64>],
) -> Result<WeakFormReport> {
    let defaults: Vec<Vec<f64>>;
    let fields: &[Vec<f64>] = if test_fields.is_empty() {
        defaults = grid.mode_indices(5).into_iter().map(|(k, l)| grid.sine_mode(k, l)).collect();
        &defaults
    } else {
        test_fields
    };
    let n = grid.interior_len();
    if let Some(f) = fields.iter().find(|f| f.len() != n) {
        return Err(Error::SizeMismatch { expected: n, got: f.len() });
    }
    let records = traj.snapshots.len();
    let step = traj.record_dt();
    let weights = QuadratureWeights::for_kernel(kernel, Order::ADot, step, records.max(1));
    let mut residuals = Vec::with_capacity(fields.len());
    let mut gu = alloc::vec![0.0; n];
    for v in fields {
        let neg_lap_v: Vec<f64> = grid.apply_laplacian(v)?.into_iter().map(|x| -x).collect();
        let momentum: Vec<f64> = traj.snapshots.iter().map(|s| grid.inner(&s.velocity(traj.dt), v)).collect();
        let stiffness: Vec<f64> = traj.snapshots.iter().map(|s| grid.inner(&s.u, &neg_lap_v)).collect();
        let mut worst: f64 = 0.0;
        for r in 1..records.saturating_sub(1) {
            let lhs = (momentum[r + 1] - momentum[r - 1]) / (2.0 * step);
            let memory =
                if kernel.is_zero() { 0.0 } else { (0..=r).map(|j| weights.weight(r, j) * stiffness[j]).sum::<f64>() };
            nl.apply(&traj.snapshots[r].u, &mut gu);
            let rhs = -stiffness[r] - memory + grid.inner(&gu, v);
            worst = worst.max((lhs - rhs).abs());
        }
        residuals.push(worst);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(WeakFormReport { residuals, max_residual })
}
