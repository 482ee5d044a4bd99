use memwave_core::diagnostics::*;
use memwave_core::domain::{make_multiplier_field, Grid};
use memwave_core::kernels::*;
use memwave_core::nonlinearity::*;
use memwave_core::quad::integrate;
use memwave_core::solver::*;
use memwave_core::trace::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn builtin_kernels() -> Vec<MemoryKernel> {
    vec![
        MemoryKernel::poly_exp(2.0, 0.0, 1.0).unwrap(),
        MemoryKernel::poly_exp(1.5, 0.3, 0.2).unwrap(),
        MemoryKernel::power_law(1.0, 3.0).unwrap(),
        MemoryKernel::exp_integral(0.5, 1.0, 0.0).unwrap(),
    ]
}

fn small_grid() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (5usize..40).prop_map(|n| Grid::interval(1.0, n).unwrap()),
        (4usize..12, 4usize..12).prop_map(|(nx, ny)| Grid::rectangle(1.0, 1.5, nx, ny).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn volterra_inverts_convolution(coeffs in prop::collection::vec(-2.0f64..2.0, 1..5), which in 0usize..4) {
        let k = &builtin_kernels()[which];
        let dt = 1e-2;
        let phi: Vec<f64> = (0..300)
            .map(|i| {
                let t = i as f64 * dt;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            })
            .collect();
        let c = convolve(|t| k.a_dot(t), &phi, dt).unwrap();
        let psi: Vec<f64> = phi.iter().zip(&c).map(|(p, c)| p + c).collect();
        let back = volterra_solve(|t| k.a_dot(t), &psi, dt).unwrap();
        let scale = phi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.iter().zip(&phi) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn kernel_derivative_is_consistent(t in 0.01f64..20.0, which in 0usize..4) {
        let k = &builtin_kernels()[which];
        let eps = 1e-5 * t.max(1e-2);
        let fd = (k.a(t + eps) - k.a(t - eps)) / (2.0 * eps);
        prop_assert!((fd - k.a_dot(t)).abs() <= 1e-6 * (1.0 + k.a_dot(t).abs()));
    }

    #[test]
    fn nonlinearities_vanish_at_zero(c in 0.01f64..5.0, p in 0.0f64..3.0) {
        prop_assert_eq!(Nonlinearity::sine(c, 1).unwrap().g(0.0), 0.0);
        prop_assert_eq!(Nonlinearity::power(-c, p, 1).unwrap().g(0.0), 0.0);
        prop_assert_eq!(Nonlinearity::zero(2).g(0.0), 0.0);
    }

    #[test]
    fn c0_scales_linearly_with_amplitude(c in 0.05f64..3.0, s in 0.1f64..4.0, p in 0.5f64..2.0) {
        let grid = c0_grid(10.0);
        let sine = |c: f64| estimate_c0(&Nonlinearity::sine(c, 1).unwrap(), &grid);
        prop_assert!((sine(s * c) - s * sine(c)).abs() <= 1e-12 * sine(s * c).max(1.0));
        let power = |c: f64| estimate_c0(&Nonlinearity::power(-c, p, 1).unwrap(), &grid);
        let (a, b) = (power(s * c), s * power(c));
        prop_assert!((a - b).abs() <= 1e-9 * a.max(b).max(C0_FLOOR) || (a <= C0_FLOOR && b <= s * C0_FLOOR));
    }

    #[test]
    fn sine_growth_ratio_is_bounded(seed in any::<u64>(), range in 0.1f64..50.0) {
        let nl = Nonlinearity::sine(1.0, 1).unwrap();
        let rep = check_growth(&nl, 0.5 + 1e-9, 500, range, seed);
        prop_assert!(rep.max_ratio <= 0.5 + 1e-9, "{}", rep.max_ratio);
    }

    #[test]
    fn primitive_matches_quadrature(x in -10.0f64..10.0, c in 0.1f64..3.0, p in 0.0f64..2.0) {
        for nl in [Nonlinearity::sine(c, 1).unwrap(), Nonlinearity::power(-c, p, 1).unwrap()] {
            let (q, _) = integrate(|s| nl.g(s), 0.0, x, 1e-13);
            prop_assert!((q - nl.G(x)).abs() <= 1e-8 * (1.0 + q.abs()), "{:?} {} {}", nl.family(), q, nl.G(x));
        }
    }

    #[test]
    fn summation_by_parts_is_exact(grid in small_grid(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.interior_len();
        let u: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let lap = grid.apply_laplacian(&u).unwrap();
        let lhs = -grid.inner(&lap, &v);
        let rhs = grid.gradient_inner(&u, &v).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()), "{} {}", lhs, rhs);
    }

    #[test]
    fn poincare_inequality(grid in small_grid(), seed in any::<u64>()) {
        let lam = grid.smallest_eigenvalue().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.interior_len();
        let u: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        prop_assert!(grid.norm_sq(&u) <= grid.gradient_norm_sq(&u).unwrap() / lam * (1.0 + 1e-9));
    }

    #[test]
    fn multiplier_field_has_unit_normal_component(grid in small_grid()) {
        let h = make_multiplier_field(&grid);
        for (b, hv) in grid.boundary_nodes().iter().zip(&h.boundary_values) {
            prop_assert_eq!(hv[0] * b.normal[0] + hv[1] * b.normal[1], 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), which in 0usize..4) {
        let grid = Grid::interval(1.0, 21).unwrap();
        let k = &builtin_kernels()[which];
        let nl = Nonlinearity::sine(1.0, 1).unwrap();
        let ic = InitialData::random_smooth(&grid, seed, 4);
        let cfg = SolverConfig::new(0.01, 0.5).with_snapshot_every(5);
        let (a, sa) = run(&grid, k, &nl, &ic, &cfg).unwrap();
        let (b, sb) = run(&grid, k, &nl, &ic, &cfg).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(sa.final_u, sb.final_u);
    }

    #[test]
    fn zero_data_gives_zero_solution(which in 0usize..4, dim in 1usize..3) {
        let grid = if dim == 1 { Grid::interval(1.0, 17).unwrap() } else { Grid::rectangle(1.0, 1.0, 9, 9).unwrap() };
        let k = &builtin_kernels()[which];
        let nl = Nonlinearity::sine(1.0, dim).unwrap();
        let (traj, _) = run(&grid, k, &nl, &InitialData::zero(&grid), &SolverConfig::new(0.02, 0.5)).unwrap();
        for s in &traj.snapshots {
            prop_assert!(s.u.iter().chain(&s.u_next).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn leapfrog_invariant_without_memory(seed in any::<u64>()) {
        let grid = Grid::interval(1.0, 33).unwrap();
        let ic = InitialData::random_smooth(&grid, seed, 6);
        let z = MemoryKernel::zero();
        let nl = Nonlinearity::zero(1);
        let cfg = SolverConfig::new(0.01, 2.0).with_snapshot_every(7);
        let (traj, _) = run(&grid, &z, &nl, &ic, &cfg).unwrap();
        let rep = energy_report(&traj, &grid, &z, &nl).unwrap();
        let e0 = rep.e_simple[0];
        for e in &rep.e_simple {
            prop_assert!((e - e0).abs() <= 1e-12 * e0.max(1e-300));
        }
    }

    #[test]
    fn history_energy_exceeds_simple_energy(seed in any::<u64>(), which in 0usize..3) {
        // the first three built-ins are dissipative
        let grid = Grid::interval(1.0, 21).unwrap();
        let k = &builtin_kernels()[which];
        prop_assume!(k.assumptions().dissipative);
        let nl = Nonlinearity::sine(1.0, 1).unwrap();
        let ic = InitialData::random_smooth(&grid, seed, 4);
        let (traj, _) = run(&grid, k, &nl, &ic, &SolverConfig::new(0.01, 2.0).with_snapshot_every(2)).unwrap();
        let rep = energy_report(&traj, &grid, k, &nl).unwrap();
        for r in 0..rep.len() {
            prop_assert!(rep.history_term[r] >= 0.0);
            let gap = rep.e_history[r] - rep.e_simple[r];
            let expect = 0.5 * k.a(rep.times[r]) * rep.grad_sq_staggered[r] + rep.history_term[r];
            prop_assert!((gap - expect).abs() <= 1e-12 * (1.0 + rep.e_history[0].abs()));
            prop_assert!(gap >= -1e-14);
        }
    }

    #[test]
    fn trace_deconvolution_round_trip(seed in any::<u64>(), which in 0usize..4) {
        let grid = Grid::interval(1.0, 21).unwrap();
        let k = &builtin_kernels()[which];
        let nl = Nonlinearity::sine(1.0, 1).unwrap();
        let ic = InitialData::random_smooth(&grid, seed, 4);
        let (traj, _) = run(&grid, k, &nl, &ic, &SolverConfig::new(1e-3, 0.5)).unwrap();
        let tr = extract_trace(&traj, &grid, k).unwrap();
        prop_assert_eq!(tr.raw[0].len(), traj.len());
        let back = deconvolve_trace(&tr, k).unwrap();
        let scale = tr.raw.iter().flatten().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (a, b) in back.raw.iter().flatten().zip(tr.raw.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
    }
}
