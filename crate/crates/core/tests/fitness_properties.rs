mod common;

use ecomplexity_core::fitness::{fcm, mfcm, run, FitnessConfig, FitnessIteration, Method, Verdict};
use ecomplexity_core::rca::IncidenceMatrix;
use proptest::prelude::*;

#[test]
fn mfcm_random_matrices_stay_inside_the_bounds() {
    let cfg = FitnessConfig::default();
    for seed in 0..100 {
        let mut rng = common::rng(seed);
        let m = common::random_incidence(&mut rng, 20, 15, 0.4);
        let r = mfcm(&m, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Converged, "seed {seed}");
        assert!(r.residual < 1e-10 && r.iterations <= 100_000);
        let nc = m.n_countries() as f64;
        assert!(r.country_scores.values.iter().all(|&c| c > 0.0 && c < nc), "seed {seed}");
        for (j, &u) in m.ubiquity_counts().iter().enumerate() {
            assert!(r.product_raw[j] >= 1.0 / (nc * u as f64), "seed {seed} product {j}");
        }
    }
}

#[test]
fn results_are_permutation_invariant() {
    let cfg = FitnessConfig::default();
    for seed in 0..30 {
        let mut rng = common::rng(300 + seed);
        let m = common::random_incidence(&mut rng, 14, 11, 0.45);
        let rows = common::shuffled(&mut rng, m.n_countries());
        let cols = common::shuffled(&mut rng, m.n_products());
        let p = m.permuted(&rows, &cols);
        for method in [Method::Fcm, Method::Mfcm] {
            let a = run(&m, method, &cfg).unwrap();
            let b = run(&p, method, &cfg).unwrap();
            assert_eq!(a.verdict, b.verdict);
            assert_eq!(a.iterations, b.iterations);
            for (label, v) in a.country_scores.iter() {
                assert!((b.country_scores.get(label).unwrap() - v).abs() < 1e-12, "seed {seed} {method}");
            }
            for (label, v) in a.product_scores.iter() {
                assert!((b.product_scores.get(label).unwrap() - v).abs() < 1e-12, "seed {seed} {method}");
            }
        }
    }
}

#[test]
fn nested_fixture_iterates() {
    let m = IncidenceMatrix::from_rows(&[[1u8, 1], [0, 1]]).unwrap();
    let mut it = FitnessIteration::new(&m, Method::Fcm);
    it.step().unwrap();
    assert!(common::max_abs_diff(it.countries(), &[4.0 / 3.0, 2.0 / 3.0]) < 1e-12);
    it.step().unwrap();
    assert!(common::max_abs_diff(it.countries(), &[8.0 / 5.0, 2.0 / 5.0]) < 1e-12);

    let mut a = FitnessIteration::new(&m, Method::Fcm);
    let mut b = FitnessIteration::new(&m, Method::Mfcm);
    for _ in 0..2 {
        a.step().unwrap();
        b.step().unwrap();
        assert!(common::max_abs_diff(a.countries(), b.countries()) < 1e-15);
        assert!(common::max_abs_diff(a.products(), b.products()) < 1e-15);
    }

    let cfg = FitnessConfig { zero_floor: 1e-3, max_iter: 10_000, ..FitnessConfig::default() };
    let r = fcm(&m, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::ZeroConvergence);
    assert!(r.country_scores.values.iter().cloned().fold(f64::INFINITY, f64::min) < 1e-3);

    let mut it = FitnessIteration::new(&m, Method::Mfcm);
    let mut x = 4.0 / 3.0;
    for n in 1..=50 {
        it.step().unwrap();
        assert!((it.countries()[0] - x).abs() < 1e-10, "step {n}");
        x = (4.0 - x) / (3.0 - x);
    }
    assert_eq!(mfcm(&m, &FitnessConfig::default()).unwrap().verdict, Verdict::BoundaryDrift);
}

fn incidence() -> impl Strategy<Value = IncidenceMatrix> {
    (2usize..9, 2usize..9)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0u8..2, c), r))
        .prop_filter_map("empty row or column", |rows| IncidenceMatrix::from_rows(&rows).ok())
}

proptest! {
    #[test]
    fn normalisation_holds_every_step(m in incidence(), steps in 1usize..40) {
        for method in [Method::Fcm, Method::Mfcm] {
            let mut it = FitnessIteration::new(&m, method);
            for _ in 0..steps {
                if it.step().is_err() {
                    break;
                }
                let sc: f64 = it.countries().iter().sum();
                let sp: f64 = it.products().iter().sum();
                prop_assert!((sc - m.n_countries() as f64).abs() < 1e-9);
                prop_assert!((sp - m.n_products() as f64).abs() < 1e-9);
            }
        }
    }
}
