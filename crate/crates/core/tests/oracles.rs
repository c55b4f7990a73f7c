//! Cross-checks against dense linear algebra.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xxz_transfer::chain::ParametrizedForm;
use xxz_transfer::charpoly::{chebyshev_s, ChebKernel};
use xxz_transfer::{
    build_direct, build_parametrized, char_poly_eval, det_y, find_roots, spectrum, BarrierLayout,
    ChainSpec,
};

const WELL_GRID: [(usize, usize); 6] = [(6, 2), (6, 3), (12, 2), (12, 3), (12, 4), (12, 6)];

fn dense(rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Product of row 1-norms: bounds `|det|` and sets the cancellation scale.
fn hadamard_scale(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .product()
}

#[test]
fn spectrum_matches_symmetric_eigen_on_random_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(2..=16);
        let bonds: Vec<usize> = (1..n).filter(|_| rng.gen_bool(0.3)).collect();
        let spec = ChainSpec::with_units(
            n,
            rng.gen_range(0.0..12.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.0..20.0),
            BarrierLayout::new(bonds).unwrap(),
            rng.gen_range(-5.0..5.0),
        )
        .unwrap();
        let m = dense(build_direct(&spec).to_dense());
        let mut oracle: Vec<f64> = SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        oracle.sort_by(f64::total_cmp);
        let ours = spectrum(&spec).unwrap();
        let norm = m.abs().row_sum().max();
        for (a, b) in ours.lambdas.iter().zip(&oracle) {
            assert!(
                (a - b).abs() <= 1e-11 * norm.max(1.0),
                "{spec:?}: {a} vs {b}"
            );
        }
        for (k, omega) in ours.omegas.iter().enumerate() {
            assert!((omega - (spec.e0() - ours.lambdas[k])).abs() < 1e-12 * norm.max(1.0));
        }
    }
}

#[test]
fn polynomial_matches_dense_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for (n, nw) in WELL_GRID {
        for beta in [1e-12, 0.5, 1.0, 9.0] {
            for delta in [1.0, 3.0] {
                let spec = ChainSpec::equal_wells(n, nw, delta, beta).unwrap();
                for _ in 0..50 {
                    let lambda = rng.gen_range(-12.0..6.0);
                    let m = dense(build_parametrized(&spec, lambda).unwrap().to_dense());
                    let brute = m.clone().lu().determinant();
                    let ours = char_poly_eval(&spec, lambda).unwrap();
                    let rel = (ours - brute).abs() / hadamard_scale(&m);
                    worst = worst.max(rel);
                    assert!(
                        rel <= 1e-8,
                        "N={n} N_w={nw} beta={beta} lambda={lambda}: {ours} vs {brute}"
                    );
                }
            }
        }
    }
    println!("worst scaled error {worst:e}");
}

#[test]
fn polynomial_at_zero_matches_small_example() {
    let spec = ChainSpec::equal_wells(6, 2, 3.0, 1.0).unwrap();
    let m = dense(build_parametrized(&spec, 0.0).unwrap().to_dense());
    let brute = m.determinant();
    let ours = char_poly_eval(&spec, 0.0).unwrap();
    assert!(
        (ours - brute).abs() <= 1e-10 * brute.abs().max(1.0),
        "{ours} vs {brute}"
    );
}

#[test]
fn polynomial_vanishes_at_dense_eigenvalues() {
    for (n, nw) in WELL_GRID {
        let spec = ChainSpec::equal_wells(n, nw, 2.0, 1.0).unwrap();
        let form = ParametrizedForm::new(&spec).unwrap();
        for lam in spectrum(&spec).unwrap().lambdas {
            let x = form.lambda_from_eigenvalue(lam);
            let m = dense(build_parametrized(&spec, x).unwrap().to_dense());
            let p = char_poly_eval(&spec, x).unwrap();
            assert!(
                p.abs() <= 1e-8 * hadamard_scale(&m),
                "N={n} N_w={nw} at {x}: {p}"
            );
        }
    }
}

#[test]
fn leading_behaviour_is_degree_n() {
    for (n, nw) in WELL_GRID {
        for beta in [1e-12, 0.5, 1.0, 9.0] {
            let spec = ChainSpec::equal_wells(n, nw, 3.0, beta).unwrap();
            let ratio = char_poly_eval(&spec, 2e3).unwrap() / char_poly_eval(&spec, 1e3).unwrap();
            let expect = 2f64.powi(n as i32);
            assert!(
                (ratio / expect - 1.0).abs() <= 1e-6,
                "N={n} N_w={nw} beta={beta}: ratio/2^N - 1 = {:e}",
                ratio / expect - 1.0
            );
        }
    }
}

#[test]
fn leading_deviation_is_explained_by_the_roots() {
    for (n, nw) in WELL_GRID {
        let spec = ChainSpec::equal_wells(n, nw, 3.0, 1.0).unwrap();
        let roots = find_roots(&spec).unwrap().lambda_roots;
        let predicted: f64 = roots
            .iter()
            .map(|r| (2e3 - r) / (2.0 * (1e3 - r)))
            .product();
        let ratio = char_poly_eval(&spec, 2e3).unwrap() / char_poly_eval(&spec, 1e3).unwrap();
        let observed = ratio / 2f64.powi(n as i32);
        assert!(
            (observed - predicted).abs() <= 1e-12,
            "N={n} N_w={nw}: {observed} vs {predicted}"
        );
    }
}

#[test]
fn single_well_is_beta_independent() {
    for lambda in [-4.0, -1.3, 0.0, 0.7, 2.0, 5.5] {
        let base = char_poly_eval(&ChainSpec::homogeneous(6, 3.0).unwrap(), lambda).unwrap();
        for beta in [0.5, 9.0] {
            let spec = ChainSpec::new(6, 3.0, beta, BarrierLayout::homogeneous()).unwrap();
            assert_eq!(char_poly_eval(&spec, lambda).unwrap(), base);
        }
    }
}

#[test]
fn chebyshev_matches_closed_forms() {
    for lambda in [-1.9, -0.5, 0.3, 1.2, 1.99] {
        let psi: f64 = (lambda / 2.0f64).acos();
        for m in 0..30i64 {
            let closed = ((m + 1) as f64 * psi).sin() / psi.sin();
            assert!((chebyshev_s(lambda, m) - closed).abs() <= 1e-9 * closed.abs().max(1.0));
        }
    }
    for lambda in [2.5f64, 3.0, -4.0, 10.0] {
        let mu = (lambda.abs() / 2.0).acosh();
        let kernel = ChebKernel::new(lambda, 25);
        for m in 0..25i64 {
            let sign = if lambda < 0.0 && m % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            let closed = sign * ((m + 1) as f64 * mu).sinh() / mu.sinh();
            assert!((kernel.get(m) - closed).abs() <= 1e-10 * closed.abs());
        }
    }
    let kernel = ChebKernel::new(2.0, 10);
    for m in 0..=10 {
        assert_eq!(kernel.get(m), (m + 1) as f64);
    }
    assert_eq!(kernel.get(-1), 0.0);
    assert_eq!(kernel.get(-2), -1.0);
}

#[test]
fn bordered_determinant_small_cases() {
    // m = 0 leaves X alone
    assert_eq!(det_y(0.7, 0, 3.25, -1.5), 3.25);
    // one Toeplitz row over a 1x1 block [x]: λx - 1
    assert!((det_y(1.5, 1, 4.0, 1.0) - (1.5 * 4.0 - 1.0)).abs() < 1e-15);
}

#[test]
fn impenetrable_barrier_roots_pair_up() {
    let spec = ChainSpec::equal_wells(6, 2, 3.0, 1e6).unwrap();
    let roots = find_roots(&spec).unwrap();
    assert_eq!(roots.omegas.len(), 6);
    let e = &roots.eigenvalues;
    let gap = e[5] - e[4];
    assert!(gap < 1e-6, "top pair split by {gap}");
    assert!(e[3] - e[2] < 1e-6 * e[3].abs().max(1.0));
    let dense = spectrum(&spec).unwrap();
    for (a, b) in dense.omegas.iter().zip(&roots.omegas) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn homogeneous_fan_is_non_positive_and_uncrossed() {
    let mut prev: Option<Vec<f64>> = None;
    for i in 0..=90 {
        let delta = 1.0 + 0.1 * i as f64;
        let omegas = spectrum(&ChainSpec::homogeneous(6, delta).unwrap())
            .unwrap()
            .energies_ascending();
        assert!(
            omegas.iter().all(|&w| w <= 1e-12),
            "delta={delta}: {omegas:?}"
        );
        assert!(omegas.windows(2).all(|w| w[0] <= w[1]));
        if let Some(p) = &prev {
            // each level moves down with delta and levels keep their order
            assert!(omegas.iter().zip(p).all(|(a, b)| a <= b));
        }
        prev = Some(omegas);
    }
}
