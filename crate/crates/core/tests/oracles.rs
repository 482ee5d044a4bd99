//! Checks against independently computed reference values.

use std::f64::consts::PI;

use memwave_core::diagnostics::*;
use memwave_core::domain::{make_multiplier_field, Grid};
use memwave_core::kernels::*;
use memwave_core::nonlinearity::*;
use memwave_core::quad::integrate;
use memwave_core::solver::*;
use memwave_core::trace::*;

fn pexp() -> MemoryKernel {
    MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap()
}

fn l2_diff(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.norm_sq(&d).sqrt()
}

#[test]
fn positive_definite_exponential_on_all_resolutions() {
    for horizon in [1.0, 10.0, 100.0] {
        for n in [50, 200, 800] {
            let cert = certify_positive_definite(|t| (-t).exp(), horizon, n).unwrap();
            assert!(cert.is_positive_definite(), "T={horizon} n={n}: {cert:?}");
        }
    }
}

#[test]
fn deconvolution_stability_constant_is_dt_independent() {
    // ‖φ‖/‖φ + ȧ∗φ‖ for φ on [0, 10], at two step sizes
    let k = pexp();
    let ratio = |dt: f64| -> f64 {
        let n = (10.0 / dt) as usize + 1;
        let phi: Vec<f64> = (0..n).map(|i| (i as f64 * dt * 1.3).sin() + 0.5 * (i as f64 * dt * 0.2).cos()).collect();
        let c = convolve(|t| k.a_dot(t), &phi, dt).unwrap();
        let psi: Vec<f64> = phi.iter().zip(&c).map(|(p, c)| p + c).collect();
        let num: f64 = phi.iter().map(|v| v * v).sum();
        let den: f64 = psi.iter().map(|v| v * v).sum();
        (num / den).sqrt()
    };
    let (r1, r2) = (ratio(0.01), ratio(0.005));
    assert!(r1.is_finite() && r2.is_finite());
    assert!(r1 / r2 < 2.0 && r2 / r1 < 2.0, "{r1} {r2}");
}

#[test]
fn long_horizon_deconvolution_ratio_plateaus() {
    // 1 - 1/(s+2) has inverse bounded by 2 on the imaginary axis
    let k = pexp();
    let dt = 0.01;
    let n = (100.0 / dt) as usize + 1;
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            (0.7 * t).sin() + 0.3 * (2.9 * t).cos() + 0.2 * (0.05 * t).sin()
        })
        .collect();
    let c = convolve(|t| k.a_dot(t), &phi, dt).unwrap();
    let psi: Vec<f64> = phi.iter().zip(&c).map(|(p, c)| p + c).collect();
    let back = volterra_solve(|t| k.a_dot(t), &psi, dt).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    let mut running = Vec::with_capacity(n);
    for (b, p) in back.iter().zip(&psi) {
        num += b * b;
        den += p * p;
        running.push(if den > 0.0 { (num / den).sqrt() } else { 1.0 });
    }
    let sup = running.iter().cloned().fold(0.0, f64::max);
    assert!(sup <= 2.0 + 1e-6, "{sup}");
    let (half, end) = (running[n / 2], running[n - 1]);
    assert!((end - half).abs() <= 0.05 * end, "{half} {end}");
}

#[test]
fn sign_profiles_of_dissipative_builtins() {
    let grid = log_grid(1e-6, 1e3, 200);
    for k in [pexp(), MemoryKernel::power_law(1.0, 3.0).unwrap(), MemoryKernel::exp_integral(0.5, 1.0, 0.5).unwrap()] {
        if k.assumptions().dissipative {
            let rep = check_sign_profile(&k, &grid);
            assert!(rep.all_passed(), "{:?}: {rep:?}", k.family());
        }
    }
}

#[test]
fn sine_energy_against_quadrature() {
    let grid = Grid::interval(1.0, 401).unwrap();
    let ic = InitialData::eigenmode(&grid, 1, 0).unwrap();
    let nl = Nonlinearity::sine(1.0, 1).unwrap();
    let z = MemoryKernel::zero();
    let cfg = SolverConfig::new(1e-3, 0.01);
    let (traj, _) = run(&grid, &z, &nl, &ic, &cfg).unwrap();
    let e = energy_simple(&traj.snapshots[0], cfg.dt, &grid, &z, &nl).unwrap();
    let (g_int, _) = integrate(|x| 1.0 - (PI * x).sin().cos(), 0.0, 1.0, 1e-13);
    let expect = PI * PI / 4.0 - g_int;
    assert!((e - expect).abs() < 1e-4, "{e} vs {expect}");
}

#[test]
fn smallest_eigenvalue_matches_stencil_formula() {
    for grid in [
        Grid::interval(1.0, 41).unwrap(),
        Grid::interval(2.5, 64).unwrap(),
        Grid::rectangle(1.0, 1.0, 21, 21).unwrap(),
        Grid::rectangle(2.0, 1.0, 31, 17).unwrap(),
    ] {
        let lam = grid.smallest_eigenvalue().unwrap();
        let exact = grid.discrete_eigenvalue(1, 1);
        assert!((lam - exact).abs() <= 1e-9 * exact, "{lam} vs {exact}");
    }
}

#[test]
fn memory_free_energy_conserved_over_ten_thousand_steps() {
    let grid = Grid::interval(1.0, 101).unwrap();
    let ic = InitialData::random_smooth(&grid, 11, 8);
    let z = MemoryKernel::zero();
    let nl = Nonlinearity::zero(1);
    let cfg = SolverConfig::new(5e-3, 50.0).with_snapshot_every(100);
    let (traj, _) = run(&grid, &z, &nl, &ic, &cfg).unwrap();
    assert!(cfg.steps() >= 10_000);
    let rep = energy_report(&traj, &grid, &z, &nl).unwrap();
    let e0 = rep.e_simple[0];
    let drift = rep.e_simple.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0;
    assert!(drift < 1e-9, "{drift}");
}

#[test]
fn history_window_matches_full_history() {
    let grid = Grid::interval(1.0, 41).unwrap();
    let k = pexp();
    let nl = Nonlinearity::sine(1.0, 1).unwrap();
    let ic = InitialData::random_smooth(&grid, 2, 5);
    let dt = 0.01;
    let window = history_window_for_tolerance(&k, dt, 1e-8).unwrap();
    assert!(window.is_some());
    let full = SolverConfig::new(dt, 20.0);
    let (_, a) = run(&grid, &k, &nl, &ic, &full).unwrap();
    let (_, b) = run(&grid, &k, &nl, &ic, &full.clone().with_history_window(window)).unwrap();
    let diff = l2_diff(&grid, &a.final_u, &b.final_u);
    assert!(diff <= 1e-6, "{diff}");
}

#[test]
fn modal_oracle_agreement_improves_under_refinement() {
    let grid = Grid::interval(1.0, 21).unwrap();
    let k = pexp();
    let nl = Nonlinearity::sine(1.0, 1).unwrap();
    let ic = InitialData::random_smooth(&grid, 4, 4);
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let sol = mild_solution_modal(&grid, &k, &nl, &ic, 19, dt, 1.0, 60).unwrap();
            let (_, s) = run(&grid, &k, &nl, &ic, &SolverConfig::new(dt, 1.0)).unwrap();
            l2_diff(&grid, &sol.field(sol.steps()), &s.final_u)
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn adversarial_growing_kernel_breaks_monotonicity() {
    // a(t) = 0.1 + 0.05 t on the table range, so ȧ > 0
    let table: Vec<f64> = (0..=40).map(|i| 0.1 + 0.05 * 0.25 * i as f64).collect();
    let k = MemoryKernel::custom_table(0.25, &table).unwrap();
    assert!(!k.assumptions().dissipative);
    let grid = Grid::interval(1.0, 41).unwrap();
    let nl = Nonlinearity::zero(1);
    let ic = InitialData::eigenmode(&grid, 1, 0).unwrap();
    let (traj, _) = run(&grid, &k, &nl, &ic, &SolverConfig::new(0.01, 5.0).with_snapshot_every(5)).unwrap();
    let rep = energy_report(&traj, &grid, &k, &nl).unwrap();
    assert!(!check_monotone(&rep.e_history, 1e-6).passed);
}

#[test]
fn coercivity_holds_along_sine_trajectory() {
    let grid = Grid::interval(1.0, 101).unwrap();
    let k = pexp();
    let nl = Nonlinearity::sine(1.0, 1).unwrap();
    let lambda = grid.smallest_eigenvalue().unwrap();
    let small = check_smallness(&nl, &k, lambda);
    assert!((small.coercivity_c - 0.3987).abs() < 2e-3, "{small:?}");
    let ic = InitialData::random_smooth(&grid, 9, 5);
    let (traj, _) = run(&grid, &k, &nl, &ic, &SolverConfig::new(5e-3, 5.0).with_snapshot_every(4)).unwrap();
    let rep = energy_report(&traj, &grid, &k, &nl).unwrap();
    let c = check_coercivity_and_bounds(&rep, lambda, small.c0);
    assert!(!c.informational);
    assert!(c.coercivity_pass, "{c:?}");
    assert!(c.bound_313 > 0.0 && c.bound_313.is_finite());
}

#[test]
fn history_energy_dominates_simple_energy() {
    let grid = Grid::interval(1.0, 41).unwrap();
    let k = pexp();
    let nl = Nonlinearity::sine(1.0, 1).unwrap();
    let ic = InitialData::random_smooth(&grid, 13, 5);
    let (traj, _) = run(&grid, &k, &nl, &ic, &SolverConfig::new(0.01, 5.0).with_snapshot_every(2)).unwrap();
    let rep = energy_report(&traj, &grid, &k, &nl).unwrap();
    for r in 0..rep.len() {
        assert!(rep.history_term[r] >= 0.0);
        assert!(rep.e_history[r] - rep.e_simple[r] >= -1e-14 * rep.e_history[0]);
    }
}

#[test]
fn dissipative_run_has_plateaued_integrated_energy() {
    let grid = Grid::interval(1.0, 41).unwrap();
    let k = pexp();
    let nl = Nonlinearity::zero(1);
    let ic = InitialData::random_smooth(&grid, 1, 4);
    let (traj, _) = run(&grid, &k, &nl, &ic, &SolverConfig::new(0.01, 50.0).with_snapshot_every(5)).unwrap();
    let rep = energy_report(&traj, &grid, &k, &nl).unwrap();
    let r = check_integrated_energy(&rep.e_history, rep.record_dt).unwrap();
    assert!(r.is_uniform, "{r:?}");
    assert!(r.c0 > 0.0 && r.c0 < 50.0, "{r:?}");
}

#[test]
fn weak_form_holds_for_memory_run() {
    let grid = Grid::interval(1.0, 41).unwrap();
    let k = pexp();
    let nl = Nonlinearity::sine(1.0, 1).unwrap();
    let ic = InitialData::random_smooth(&grid, 21, 4);
    let (traj, _) = run(&grid, &k, &nl, &ic, &SolverConfig::new(0.005, 1.0)).unwrap();
    let r = check_weak_form(&traj, &grid, &k, &nl, &[]).unwrap();
    assert!(r.max_residual < 1e-2, "{r:?}");
}

#[test]
fn rectangle_identity_converges_and_boundary_forms_agree() {
    let k = pexp();
    let nl = Nonlinearity::sine(1.0, 2).unwrap();
    let mut prev = f64::INFINITY;
    for (n, dt) in [(13, 0.02), (25, 0.01), (49, 0.005)] {
        let grid = Grid::rectangle(1.0, 1.0, n, n).unwrap();
        let ic = InitialData::random_smooth(&grid, 6, 3);
        let (traj, _) = run(&grid, &k, &nl, &ic, &SolverConfig::new(dt, 0.5)).unwrap();
        let led = multiplier_identity_residual(&traj, &grid, &k, &nl, &make_multiplier_field(&grid), 0.0, 0.5).unwrap();
        assert!((led.lhs - led.lhs_reduced).abs() <= 1e-9 * led.lhs.abs(), "{led:?}");
        assert!(led.residual.abs() <= 0.5 * prev, "n={n}: {led:?}");
        prev = led.residual.abs();
    }
}

fn family(grid: &Grid, seeds: std::ops::Range<u64>, t_final: f64) -> Vec<TraceRun> {
    let k = pexp();
    let nl = Nonlinearity::sine(1.0, 1).unwrap();
    seeds
        .map(|seed| {
            let ic = InitialData::random_smooth(grid, seed, 5);
            let (traj, _) = run(grid, &k, &nl, &ic, &SolverConfig::new(0.01, t_final)).unwrap();
            TraceRun {
                trace: extract_trace(&traj, grid, &k).unwrap(),
                energy: energy_report(&traj, grid, &k, &nl).unwrap(),
            }
        })
        .collect()
}

#[test]
fn energy_ratio_constant_is_stable_across_families() {
    let grid = Grid::interval(1.0, 51).unwrap();
    let k = pexp();
    let first = family(&grid, 0..10, 4.0);
    let second = family(&grid, 10..20, 4.0);
    let c1 = direct_inequality_report(&first, &k, 4.0).unwrap().max_energy_ratio;
    let c2 = direct_inequality_report(&second, &k, 4.0).unwrap().max_energy_ratio;
    assert!((c1 - c2).abs() <= 0.2 * c1, "{c1} {c2}");
    let c_half = direct_inequality_report(&first, &k, 2.0).unwrap().max_energy_ratio;
    assert!((c1 - c_half).abs() <= 0.2 * c1, "{c_half} {c1}");
    // the measured constant bounds the second family
    for r in direct_inequality_report(&second, &k, 4.0).unwrap().runs {
        assert!(r.hidden <= 1.2 * c1 * r.energy_bound);
    }
}

#[test]
fn zero_data_is_degenerate_for_the_direct_inequality() {
    let grid = Grid::interval(1.0, 21).unwrap();
    let k = pexp();
    let nl = Nonlinearity::zero(1);
    let (traj, _) = run(&grid, &k, &nl, &InitialData::zero(&grid), &SolverConfig::new(0.01, 0.5)).unwrap();
    let runs = [TraceRun {
        trace: extract_trace(&traj, &grid, &k).unwrap(),
        energy: energy_report(&traj, &grid, &k, &nl).unwrap(),
    }];
    assert!(matches!(direct_inequality_report(&runs, &k, 0.5), Err(memwave_core::Error::DegenerateData(_))));
}
