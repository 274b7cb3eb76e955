use mercer_eigen::experiments::{read_csv, write_csv, EigenRow, PowerRow};
use mercer_eigen::{
    discrete_inner, fill_distance, greedy_select, random_interval_points, Criterion, Domain,
    Kernel, NewtonBasis, QuadratureSet, ZooKernel,
};
use proptest::prelude::*;

fn zoo_id() -> impl Strategy<Value = (String, u32, f64)> {
    prop_oneof![
        (0u32..=3).prop_map(|b| (format!("matern{b}"), 0, 0.0)),
        (1u32..=4, prop_oneof![Just(0.0), Just(1.0)]).prop_map(|(b, e)| ("bb".to_string(), b, e)),
    ]
}

fn point_in(domain: Domain) -> BoxedStrategy<Vec<f64>> {
    match domain {
        Domain::UnitInterval => (0.0..=1.0f64).prop_map(|x| vec![x]).boxed(),
        Domain::UnitDisk => (0.0..1.0f64, 0.0..std::f64::consts::TAU)
            .prop_map(|(r, t)| vec![r.sqrt() * t.cos(), r.sqrt() * t.sin()])
            .boxed(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_are_bitwise_symmetric(
        (id, beta, eps) in zoo_id(),
        seed in any::<u64>(),
    ) {
        let k = ZooKernel::from_id(&id, beta, eps).unwrap();
        let mut runner = proptest::test_runner::TestRunner::new_with_rng(
            Default::default(),
            proptest::test_runner::TestRng::from_seed(
                proptest::test_runner::RngAlgorithm::ChaCha,
                &[seed.to_le_bytes(), [0; 8], [0; 8], [0; 8]].concat(),
            ),
        );
        let strat = point_in(k.domain());
        for _ in 0..8 {
            let x = strat.new_tree(&mut runner).unwrap().current();
            let y = strat.new_tree(&mut runner).unwrap().current();
            prop_assert_eq!(k.eval(&x, &y).to_bits(), k.eval(&y, &x).to_bits());
            prop_assert!(k.eval(&x, &x) > 0.0);
        }
    }

    #[test]
    fn fill_distance_never_grows(
        seed in any::<u64>(),
        picks in proptest::collection::vec(0usize..60, 1..20),
    ) {
        let c = random_interval_points(60, seed);
        let mut selected: Vec<Vec<f64>> = Vec::new();
        let mut last = f64::INFINITY;
        for &p in &picks {
            selected.push(c.point(p).to_vec());
            let h = fill_distance(&selected, &c);
            prop_assert!(h <= last);
            last = h;
        }
    }

    #[test]
    fn newton_residual_is_pythagorean(
        seed in any::<u64>(),
        beta in 1u32..=3,
        criterion in prop_oneof![Just(Criterion::Linf), Just(Criterion::L2)],
    ) {
        let k = ZooKernel::from_id("bb", beta, 0.0).unwrap();
        let c = random_interval_points(80, seed);
        let b = greedy_select(&k, &c, 12, criterion).unwrap();
        let diag: Vec<f64> = c.points().map(|x| k.diag(x)).collect();
        // r_n = K(x, x) − Σ v_i², and partial sums only shrink it.
        let mut running = diag.clone();
        for row in b.values() {
            for (r, v) in running.iter_mut().zip(row) {
                prop_assert!(*r - v * v <= *r);
                *r -= v * v;
            }
        }
        for (r, s) in running.iter().zip(b.residual()) {
            prop_assert!((r - s).abs() <= 1e-14 * diag.iter().copied().fold(0.0, f64::max));
        }
        for &p in b.selected_indices() {
            prop_assert!(b.residual()[p].abs() <= 1e-10 * diag[p]);
        }
    }

    #[test]
    fn linf_greedy_max_residual_decreases(seed in any::<u64>(), beta in 1u32..=2) {
        let k = ZooKernel::from_id("bb", beta, 1.0).unwrap();
        let c = random_interval_points(100, seed);
        let b = greedy_select(&k, &c, 20, Criterion::Linf).unwrap();
        let trace = b.selection_trace();
        for w in trace.windows(2) {
            prop_assert!(w[1].residual_max <= w[0].residual_max);
        }
    }

    #[test]
    fn selection_is_deterministic(seed in any::<u64>()) {
        let k = ZooKernel::from_id("bb", 2, 1.0).unwrap();
        let c = random_interval_points(50, seed);
        let a = greedy_select(&k, &c, 10, Criterion::L2).unwrap();
        let b = greedy_select(&k, &c, 10, Criterion::L2).unwrap();
        prop_assert_eq!(a.selected_indices(), b.selected_indices());
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn random_points_sorted_distinct_inside(seed in any::<u64>(), count in 1usize..300) {
        let q = random_interval_points(count, seed);
        prop_assert_eq!(q.len(), count);
        prop_assert!(q.coords().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(q.coords().iter().all(|&x| x > 0.0 && x < 1.0));
        prop_assert_eq!(q, random_interval_points(count, seed));
    }

    #[test]
    fn discrete_inner_is_symmetric_bilinear(
        f in proptest::collection::vec(-10.0..10.0f64, 7),
        g in proptest::collection::vec(-10.0..10.0f64, 7),
        a in -3.0..3.0f64,
    ) {
        let q = random_interval_points(7, 0);
        let fg = discrete_inner(&f, &g, &q).unwrap();
        prop_assert_eq!(fg, discrete_inner(&g, &f, &q).unwrap());
        let af: Vec<f64> = f.iter().map(|v| a * v).collect();
        let scaled = discrete_inner(&af, &g, &q).unwrap();
        prop_assert!((scaled - a * fg).abs() <= 1e-12 * (1.0 + fg.abs()));
    }

    #[test]
    fn eigen_rows_round_trip_through_csv(
        rows in proptest::collection::vec(
            (1usize..500, any::<f64>(), proptest::option::of(-1e3..1e3f64), any::<bool>()),
            0..20,
        )
    ) {
        let rows: Vec<EigenRow> = rows
            .into_iter()
            .filter(|r| r.1.is_finite())
            .map(|(j, l, e, u)| EigenRow {
                j,
                lambda_jn: l,
                lambda_exact: e,
                gap: e.map(|e| e - l),
                eigenfunction_error: e.map(f64::abs),
                unstable: u,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back: Vec<EigenRow> = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn power_rows_round_trip_through_csv(
        values in proptest::collection::vec(
            (0.0..1.0f64, proptest::option::of(0.0..1.0f64), proptest::option::of(1e-300..1e-3f64)),
            1..30,
        )
    ) {
        let rows: Vec<PowerRow> = values
            .iter()
            .enumerate()
            .map(|(n, &(t, d, g))| PowerRow { n, theory: t, direct: d, greedy_linf: g, greedy_l2: d })
            .collect();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back: Vec<PowerRow> = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, rows);
    }
}

#[test]
fn manual_extension_matches_greedy_values() {
    let k = ZooKernel::from_id("matern2", 0, 0.0).unwrap();
    let c = QuadratureSet::from_coords(
        Domain::UnitDisk,
        vec![0.0, 0.0, 0.5, 0.0, 0.0, -0.5, -0.3, 0.3],
    )
    .unwrap();
    let greedy = greedy_select(&k, &c, 4, Criterion::Linf).unwrap();
    let mut manual = NewtonBasis::empty(&k, &c);
    for &i in greedy.selected_indices() {
        manual.extend(i, &k, &c).unwrap();
    }
    for (a, b) in greedy.values().iter().zip(manual.values()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
