use proptest::prelude::*;
use xxz_transfer::dynamics::Propagator;
use xxz_transfer::sweep::ExperimentConfig;
use xxz_transfer::{
    build_direct, det_y, energy_gap, evolve, find_roots, spectrum, AmplitudeState, BarrierLayout,
    ChainSpec,
};

fn any_chain() -> impl Strategy<Value = ChainSpec> {
    (
        2usize..=14,
        0.0f64..10.0,
        0.0f64..20.0,
        proptest::collection::vec(any::<bool>(), 13),
    )
        .prop_map(|(n, delta, beta, mask)| {
            let bonds = (1..n).filter(|&b| mask[b - 1]);
            ChainSpec::new(n, delta, beta, BarrierLayout::new(bonds).unwrap()).unwrap()
        })
}

fn symmetric_chain() -> impl Strategy<Value = ChainSpec> {
    any_chain().prop_map(|spec| {
        let n = spec.n_sites();
        let mut bonds: Vec<usize> = spec.layout().bonds().to_vec();
        bonds.extend(spec.layout().bonds().iter().map(|b| n - b));
        bonds.sort_unstable();
        bonds.dedup();
        spec.with_layout(BarrierLayout::new(bonds).unwrap())
            .unwrap()
    })
}

fn equal_well_chain() -> impl Strategy<Value = ChainSpec> {
    (
        prop::sample::select(vec![
            (6, 2),
            (6, 3),
            (8, 2),
            (8, 4),
            (12, 2),
            (12, 3),
            (12, 4),
            (12, 6),
            (15, 5),
        ]),
        0.5f64..10.0,
        0.0f64..20.0,
    )
        .prop_map(|((n, nw), delta, beta)| ChainSpec::equal_wells(n, nw, delta, beta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn eigenvectors_orthonormal_with_small_residual(spec in any_chain()) {
        let op = build_direct(&spec);
        let res = spectrum(&spec).unwrap();
        let norm = op.norm_inf().max(1.0);
        for (i, v) in res.vectors.iter().enumerate() {
            for (j, w) in res.vectors.iter().enumerate() {
                let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-10);
            }
            let av = op.matvec(v);
            let r = av.iter().zip(v).map(|(a, x)| (a - res.lambdas[i] * x).abs()).fold(0.0, f64::max);
            prop_assert!(r <= 1e-9 * norm);
        }
        let sum: f64 = res.lambdas.iter().sum();
        prop_assert!((sum - op.trace()).abs() <= 1e-10 * norm * spec.n_sites() as f64);
    }

    #[test]
    fn mirrored_chain_is_isospectral(spec in any_chain()) {
        let a = spectrum(&spec).unwrap();
        let b = spectrum(&spec.mirrored()).unwrap();
        for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
            prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn symmetric_layouts_give_palindromic_operators(spec in symmetric_chain()) {
        prop_assert!(spec.layout().is_symmetric(spec.n_sites()));
        prop_assert!(build_direct(&spec).is_palindromic());
    }

    #[test]
    fn gap_is_non_negative(spec in any_chain()) {
        let g = energy_gap(&spec).unwrap();
        prop_assert!(g.delta_e >= 0.0);
        if g.delta_e > 0.0 {
            prop_assert!((g.t_tau * g.delta_e - std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn evolution_is_unitary(spec in any_chain(), t in 0.0f64..5000.0) {
        let n = spec.n_sites();
        let prop = Propagator::new(spectrum(&spec).unwrap(), &AmplitudeState::left_edge(n)).unwrap();
        let state = prop.state(t);
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        let trace = evolve(&spec, &AmplitudeState::left_edge(n), &[t]).unwrap();
        let (l, r) = (trace.f_left[0], trace.f_right[0]);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&l) && (0.0..=1.0 + 1e-12).contains(&r));
        if n > 1 {
            prop_assert!(l + r <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn symmetric_chains_transfer_with_parity(spec in symmetric_chain(), t in 0.0f64..3000.0) {
        let n = spec.n_sites();
        let fwd = evolve(&spec, &AmplitudeState::left_edge(n), &[t]).unwrap();
        let back = evolve(&spec, &AmplitudeState::right_edge(n), &[t]).unwrap();
        prop_assert!((fwd.f_right[0] - back.f_left[0]).abs() < 1e-10);
    }

    #[test]
    fn roots_match_dense_spectrum(spec in equal_well_chain()) {
        let dense = spectrum(&spec).unwrap();
        let roots = find_roots(&spec).unwrap();
        prop_assert_eq!(roots.omegas.len(), dense.omegas.len());
        for (a, b) in dense.omegas.iter().zip(&roots.omegas) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
        for &(lo, hi) in &roots.brackets {
            prop_assert!(hi - lo <= 1e-10 * lo.abs().max(hi.abs()).max(1.0));
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn bordered_determinant_is_linear_in_the_block(
        lambda in -4.0f64..4.0, m in 0usize..12,
        a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0,
    ) {
        let lhs = det_y(lambda, m, a + c, b + d);
        let rhs = det_y(lambda, m, a, b) + det_y(lambda, m, c, d);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn range_axes_include_both_ends(start in 0.0f64..10.0, width in 0.1f64..10.0, count in 2usize..50) {
        let text = format!("n_sites = 6\ndelta = \"{start}:{}:{count}\"\n", start + width);
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(cfg.deltas.len(), count);
        prop_assert_eq!(cfg.deltas[0], start);
        prop_assert!((cfg.deltas[count - 1] - (start + width)).abs() < 1e-12);
    }
}
