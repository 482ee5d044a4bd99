//! Explicit leapfrog for `u_tt = Δu + ∫_0^t ȧ(t-s)Δu(s) ds + g(u)` with the
//! memory integral discretized over a stored `Δu` history.

mod modal;
mod weak;

pub use modal::{mild_solution_modal, modal_resolvent, ModalResolvent, ModalSolution};
pub use weak::{check_weak_form, WeakFormReport};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::kernels::{MemoryKernel, Order, QuadratureWeights};
use crate::nonlinearity::Nonlinearity;
use crate::quad;

/// Default fraction of the CFL limit accepted for `dt`.
pub const DEFAULT_CFL_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub cfl_check: bool,
    pub cfl_factor: f64,
    /// Number of stored history levels; `None` keeps the full history.
    pub history_window: Option<usize>,
    /// Record a snapshot every this many steps.
    pub snapshot_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        SolverConfig {
            dt,
            t_final,
            cfl_check: true,
            cfl_factor: DEFAULT_CFL_FACTOR,
            history_window: None,
            snapshot_every: 1,
        }
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_history_window(mut self, window: Option<usize>) -> Self {
        self.history_window = window;
        self
    }

    /// Number of steps to reach `t_final` (the nearest integer when
    /// `t_final/dt` is integral up to rounding, else rounded up).
    pub fn steps(&self) -> usize {
        let ratio = self.t_final / self.dt;
        let nearest = libm::round(ratio);
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            libm::ceil(ratio) as usize
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::ParameterViolation(format!("solver.dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::ParameterViolation(format!("solver.t_final must be nonnegative, got {}", self.t_final)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::ParameterViolation("solver.snapshot_every must be at least 1".into()));
        }
        if self.history_window == Some(0) {
            return Err(Error::ParameterViolation("solver.history_window must be at least 1".into()));
        }
        if self.cfl_check {
            let limit = self.cfl_factor * grid.cfl_limit();
            if self.dt > limit {
                return Err(Error::CflViolation { dt: self.dt, limit });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialTag {
    Eigenmode { k: usize, l: usize },
    RandomSmooth { seed: u64, cutoff: usize },
    Custom,
}

/// Initial displacement and velocity on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub tag: InitialTag,
}

impl InitialData {
    /// `u₀ = Π sin(k_i π x_i / L_i)` with unit amplitude, `u₁ = 0`.
    pub fn eigenmode(grid: &Grid, k: usize, l: usize) -> Result<Self> {
        let [mx, my] = grid.interior_shape();
        if k == 0 || k > mx || (grid.dim() == 2 && (l == 0 || l > my)) {
            return Err(Error::ParameterViolation(format!("eigenmode ({k}, {l}) not resolved by the grid")));
        }
        let mut u0 = grid.sine_mode(k, l);
        let scale = if grid.dim() == 2 {
            libm::sqrt(grid.extents()[0] * grid.extents()[1]) / 2.0
        } else {
            libm::sqrt(grid.extents()[0] / 2.0)
        };
        for v in u0.iter_mut() {
            *v *= scale;
        }
        Ok(InitialData { u1: vec![0.0; u0.len()], u0, tag: InitialTag::Eigenmode { k, l } })
    }

    /// Band-limited random displacement and velocity.
    pub fn random_smooth(grid: &Grid, seed: u64, cutoff: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0 = grid.random_smooth_field(&mut rng, cutoff);
        let u1 = grid.random_smooth_field(&mut rng, cutoff);
        InitialData { u0, u1, tag: InitialTag::RandomSmooth { seed, cutoff } }
    }

    pub fn custom(grid: &Grid, u0: Vec<f64>, u1: Vec<f64>) -> Result<Self> {
        let ic = InitialData { u0, u1, tag: InitialTag::Custom };
        ic.validate(grid)?;
        Ok(ic)
    }

    pub fn zero(grid: &Grid) -> Self {
        let n = grid.interior_len();
        InitialData { u0: vec![0.0; n], u1: vec![0.0; n], tag: InitialTag::Custom }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let n = grid.interior_len();
        for f in [&self.u0, &self.u1] {
            if f.len() != n {
                return Err(Error::SizeMismatch { expected: n, got: f.len() });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::ParameterViolation("initial data must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Time level `n` of the scheme together with the stored `Δu` history.
#[derive(Debug, Clone)]
pub struct SimState {
    pub step: usize,
    pub t: f64,
    pub u_prev: Vec<f64>,
    pub u: Vec<f64>,
    history: Vec<f64>,
    slots: usize,
    len: usize,
    /// oldest retained level
    first: usize,
}

impl SimState {
    /// Number of stored history levels, `min(n+1, W)`.
    pub fn history_len(&self) -> usize {
        if self.slots == 0 {
            0
        } else {
            self.step + 1 - self.first
        }
    }

    /// Stored `Δu^j`, if retained.
    pub fn laplacian_at(&self, j: usize) -> Option<&[f64]> {
        if self.slots == 0 || j < self.first || j > self.step {
            return None;
        }
        let s = j % self.slots;
        Some(&self.history[s * self.len..(s + 1) * self.len])
    }

    /// Centered velocity estimate needs `u^{n+1}`; this is the backward one.
    pub fn backward_velocity(&self, dt: f64) -> Vec<f64> {
        self.u.iter().zip(&self.u_prev).map(|(a, b)| (a - b) / dt).collect()
    }
}

/// One recorded time level with its neighbours, enough for centered
/// velocities and staggered energies.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u_prev: Vec<f64>,
    pub u: Vec<f64>,
    pub u_next: Vec<f64>,
}

impl Snapshot {
    pub fn velocity(&self, dt: f64) -> Vec<f64> {
        self.u_next.iter().zip(&self.u_prev).map(|(a, b)| (a - b) / (2.0 * dt)).collect()
    }
}

/// Snapshots at a uniform cadence plus the data they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub cadence: usize,
    pub history_window: Option<usize>,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    /// Spacing between records.
    pub fn record_dt(&self) -> f64 {
        self.dt * self.cadence as f64
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    pub final_u: Vec<f64>,
    /// `max |u|` over all steps.
    pub max_abs: f64,
    /// `max ‖u‖_{L²}` over all steps.
    pub max_l2: f64,
}

/// A running simulation.
pub struct Simulation<'a> {
    grid: &'a Grid,
    nl: &'a Nonlinearity,
    cfg: SolverConfig,
    weights: Option<QuadratureWeights>,
    state: SimState,
    u1: Vec<f64>,
    force: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Simulation<'a> {
    /// Sets up level 0 and the ghost level `u^{-1}` chosen so that the
    /// centered velocity at `t = 0` equals `u₁`.
    pub fn new(
        grid: &'a Grid,
        kernel: &'a MemoryKernel,
        nl: &'a Nonlinearity,
        ic: &InitialData,
        cfg: SolverConfig,
    ) -> Result<Self> {
        cfg.validate(grid)?;
        ic.validate(grid)?;
        let len = grid.interior_len();
        let total = cfg.steps() + 2;
        let weights = if kernel.is_zero() {
            None
        } else {
            Some(QuadratureWeights::for_kernel(kernel, Order::ADot, cfg.dt, total))
        };
        let slots = match (&weights, cfg.history_window) {
            (None, _) => 0,
            (Some(_), None) => total,
            (Some(_), Some(w)) => w.min(total),
        };
        let mut state = SimState {
            step: 0,
            t: 0.0,
            u_prev: vec![0.0; len],
            u: ic.u0.clone(),
            history: vec![0.0; slots * len],
            slots,
            len,
            first: 0,
        };
        let mut force = vec![0.0; len];
        let mut scratch = vec![0.0; len];
        grid.apply_laplacian_into(&ic.u0, &mut force)?;
        if slots > 0 {
            state.history[..len].copy_from_slice(&force);
        }
        nl.apply(&ic.u0, &mut scratch);
        let dt = cfg.dt;
        for i in 0..len {
            let f = force[i] + scratch[i];
            state.u_prev[i] = ic.u0[i] - dt * ic.u1[i] + 0.5 * dt * dt * f;
        }
        Ok(Simulation { grid, nl, cfg, weights, state, u1: ic.u1.clone(), force, scratch })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Memory term `Q_n` at the current level into `out`.
    fn memory_term(&self, out: &mut [f64]) {
        out.fill(0.0);
        let (Some(w), n) = (&self.weights, self.state.step) else { return };
        if n == 0 {
            return;
        }
        for j in self.state.first..=n {
            let wj = w.weight(n, j);
            if wj == 0.0 {
                continue;
            }
            let lap = self.state.laplacian_at(j).expect("retained level");
            for (o, l) in out.iter_mut().zip(lap) {
                *o += wj * l;
            }
        }
    }

    /// Computes `u^{n+1}` without advancing.
    pub fn peek_next(&mut self) -> Result<Vec<f64>> {
        let len = self.state.len;
        let dt = self.cfg.dt;
        let n = self.state.step;
        let mut force = core::mem::take(&mut self.force);
        let mut scratch = core::mem::take(&mut self.scratch);
        match self.state.laplacian_at(n) {
            Some(lap) => force.copy_from_slice(lap),
            None => self.grid.apply_laplacian_into(&self.state.u, &mut force)?,
        }
        let mut next = vec![0.0; len];
        if n == 0 {
            // Taylor start; the memory integral vanishes at t = 0
            self.nl.apply(&self.state.u, &mut scratch);
            for i in 0..len {
                next[i] = self.state.u[i] + dt * self.u1[i] + 0.5 * dt * dt * (force[i] + scratch[i]);
            }
        } else {
            self.memory_term(&mut scratch);
            for (f, q) in force.iter_mut().zip(&scratch) {
                *f += q;
            }
            self.nl.apply(&self.state.u, &mut scratch);
            let dt2 = dt * dt;
            for i in 0..len {
                next[i] = 2.0 * self.state.u[i] - self.state.u_prev[i] + dt2 * (force[i] + scratch[i]);
            }
        }
        self.force = force;
        self.scratch = scratch;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField { step: n + 1 });
        }
        Ok(next)
    }

    /// Installs a previously computed `u^{n+1}` and extends the history.
    fn advance_to(&mut self, next: Vec<f64>) -> Result<()> {
        let st = &mut self.state;
        st.u_prev = core::mem::replace(&mut st.u, next);
        st.step += 1;
        st.t = st.step as f64 * self.cfg.dt;
        if st.slots > 0 {
            if st.step + 1 - st.first > st.slots {
                st.first += 1;
            }
            let s = st.step % st.slots;
            let len = st.len;
            let (u, hist) = (&st.u, &mut st.history[s * len..(s + 1) * len]);
            self.grid.apply_laplacian_into(u, hist)?;
        }
        Ok(())
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<()> {
        let next = self.peek_next()?;
        self.advance_to(next)
    }
}

/// Runs to `t_final`, recording a snapshot every `snapshot_every` steps.
///
/// One extra step past the end is computed so the last record has a
/// centered velocity.
pub fn run(
    grid: &Grid,
    kernel: &MemoryKernel,
    nl: &Nonlinearity,
    ic: &InitialData,
    cfg: &SolverConfig,
) -> Result<(Trajectory, RunSummary)> {
    let mut sim = Simulation::new(grid, kernel, nl, ic, cfg.clone())?;
    let steps = cfg.steps();
    let mut snapshots = Vec::with_capacity(steps / cfg.snapshot_every + 1);
    let mut max_abs: f64 = 0.0;
    let mut max_l2: f64 = 0.0;
    for n in 0..=steps {
        let next = sim.peek_next()?;
        let st = sim.state();
        max_abs = st.u.iter().fold(max_abs, |m, v| m.max(v.abs()));
        max_l2 = max_l2.max(libm::sqrt(grid.norm_sq(&st.u)));
        if n % cfg.snapshot_every == 0 {
            snapshots.push(Snapshot {
                step: n,
                t: st.t,
                u_prev: st.u_prev.clone(),
                u: st.u.clone(),
                u_next: next.clone(),
            });
        }
        if n < steps {
            sim.advance_to(next)?;
        }
    }
    let st = sim.state();
    let summary = RunSummary { steps, t_final: st.t, final_u: st.u.clone(), max_abs, max_l2 };
    let traj = Trajectory {
        dt: cfg.dt,
        cadence: cfg.snapshot_every,
        history_window: cfg.history_window,
        u0: ic.u0.clone(),
        u1: ic.u1.clone(),
        snapshots,
    };
    Ok((traj, summary))
}

/// Smallest history window (in steps) whose discarded tail satisfies
/// `∫_{t_tail}^∞ |ȧ| ≤ tol`.
pub fn history_window_for_tolerance(kernel: &MemoryKernel, dt: f64, tol: f64) -> Result<Option<usize>> {
    if kernel.is_zero() {
        return Ok(Some(1));
    }
    let tail = |t: f64| quad::integrate_to_infinity(|s| kernel.a_dot(s).abs(), t, 1e-14).0;
    let mut hi = 1.0;
    while tail(hi) > tol {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !(dt > 0.0) {
        return Err(Error::ParameterViolation("dt must be positive".into()));
    }
    Ok(Some(libm::ceil(hi / dt) as usize + 1))
}
