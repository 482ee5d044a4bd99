use memwave::config::{Format, InitialKind, RunConfig};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -10.0f64..10.0,
        Just(0.0),
        Just(-0.0),
        Just(1e-300),
    ]
}

fn floats(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(finite(), 0..max)
}

fn config() -> impl Strategy<Value = RunConfig> {
    let domain = (1usize..3, floats(3), prop::collection::vec(0usize..10_000, 0..3));
    let kernel =
        (prop::sample::select(vec!["exp_integral", "poly_exp", "power_law", "zero", "custom_table"]), floats(12));
    let nl = (prop::sample::select(vec!["power", "sine", "zero"]), floats(3));
    let initial = (
        prop::sample::select(vec![
            InitialKind::Eigenmode,
            InitialKind::RandomSmooth,
            InitialKind::Zero,
            InitialKind::Custom,
        ]),
        prop::collection::vec(0usize..100, 0..3),
        0usize..64,
        floats(6),
        floats(6),
    );
    let solver = (finite(), finite(), any::<bool>(), finite(), prop::option::of(0usize..100_000));
    let outputs = (
        "[A-Za-z0-9_./-]{1,24}",
        0usize..1000,
        prop::collection::vec(prop::sample::select(vec![Format::Csv, Format::Bin]), 0..3),
        any::<bool>(),
    );
    (any::<u64>(), domain, kernel, nl, initial, solver, outputs).prop_map(|(seed, d, k, n, i, s, o)| {
        let mut c = RunConfig { seed, ..RunConfig::default() };
        (c.domain.dim, c.domain.extents, c.domain.nodes) = d;
        c.kernel.family = k.0.into();
        c.kernel.params = k.1;
        c.nonlinearity.family = n.0.into();
        c.nonlinearity.params = n.1;
        (c.initial.kind, c.initial.mode, c.initial.cutoff, c.initial.u0, c.initial.u1) = i;
        (c.solver.dt, c.solver.t_final, c.solver.cfl_check, c.solver.cfl_factor, c.solver.history_window) = s;
        c.outputs.directory = o.0;
        c.outputs.snapshot_every = o.1;
        c.outputs.formats = o.2;
        c.outputs.check_identity = o.3;
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_inverts_serialize(c in config()) {
        let text = c.serialize();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        // bitwise, so -0.0 and 0.0 are told apart
        for key in memwave::config::KEYS {
            prop_assert_eq!(back.get(key).unwrap(), c.get(key).unwrap());
        }
        prop_assert_eq!(back.serialize(), text);
    }

    #[test]
    fn key_order_and_comments_do_not_matter(c in config(), seed in any::<u64>()) {
        let mut lines: Vec<String> = c.serialize().lines().map(|l| format!("  {l}   # note")).collect();
        let n = lines.len();
        for i in 0..n {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % n as u64) as usize;
            lines.swap(i, j);
        }
        lines.insert(0, "# shuffled".into());
        let back = RunConfig::parse(&lines.join("\n")).unwrap();
        prop_assert_eq!(back, c);
    }
}
