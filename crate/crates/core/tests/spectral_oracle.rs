mod common;

use ecomplexity_core::rca::IncidenceMatrix;
use ecomplexity_core::reflections::{coupling_matrix, diversity, eci, mr_iterate, pci, standardize, ubiquity};
use ecomplexity_core::{Entity, Error};
use nalgebra::DMatrix;
use rand::Rng;

fn dense(m: &IncidenceMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.n_countries(), m.n_products(), |i, j| f64::from(u8::from(m.get(i, j))))
}

// Second eigenpair of the non-symmetric coupling matrix, found without
// symmetrisation: Schur eigenvalues, then the null space of C − λ₂I.
fn oracle(m: &IncidenceMatrix, entity: Entity) -> (f64, Vec<f64>) {
    let mm = dense(m);
    let d = mm.column_sum();
    let u = mm.row_sum().transpose();
    let dinv = DMatrix::from_diagonal(&d.map(|x| 1.0 / x));
    let uinv = DMatrix::from_diagonal(&u.map(|x| 1.0 / x));
    let c = match entity {
        Entity::Country => &dinv * &mm * &uinv * mm.transpose(),
        Entity::Product => &uinv * mm.transpose() * &dinv * &mm,
    };
    let n = c.nrows();
    let mut eig: Vec<_> = c.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    assert!(eig[1].im.abs() < 1e-9);
    let lambda2 = eig[1].re;
    let shifted = &c - DMatrix::identity(n, n) * lambda2;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.unwrap();
    let k = svd.singular_values.argmin().0;
    let v: Vec<f64> = vt.row(k).iter().copied().collect();
    let mut z = standardize(&v);
    let degree: Vec<f64> = match entity {
        Entity::Country => d.iter().copied().collect(),
        Entity::Product => u.iter().map(|x| -x).collect(),
    };
    let mz = z.iter().sum::<f64>() / n as f64;
    let md = degree.iter().sum::<f64>() / n as f64;
    let cov: f64 = z.iter().zip(&degree).map(|(a, b)| (a - mz) * (b - md)).sum();
    // Ties with the degree fall back to positive skew.
    let flip = if cov.abs() > 1e-9 { cov < 0.0 } else { z.iter().map(|x| x * x * x).sum::<f64>() < 0.0 };
    if flip {
        z.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda2, z)
}

#[test]
fn triangular_fixture_matches_dense_solver() {
    let m = IncidenceMatrix::from_rows(&[[1u8, 1, 1], [1, 1, 0], [1, 0, 0]]).unwrap();
    let (lambda, z) = oracle(&m, Entity::Country);
    assert!((lambda - 0.25).abs() < 1e-12);
    for (a, b) in z.iter().zip([1.0, 0.0, -1.0]) {
        assert!((a - b).abs() < 1e-9);
    }
    let (index, spec) = eci(&m, 1e-9).unwrap();
    assert!((spec.eigenvalue - 0.25).abs() < 1e-12);
    assert!(common::max_abs_diff(&index.values, &[1.0, 0.0, -1.0]) < 1e-9);
}

#[test]
fn random_matrices_match_dense_solver() {
    let mut checked = 0;
    for seed in 0..60 {
        let mut rng = common::rng(1000 + seed);
        let (r, c) = (rng.random_range(4..16), rng.random_range(4..14));
        let m = common::random_incidence(&mut rng, r, c, 0.45);
        for entity in [Entity::Country, Entity::Product] {
            let ours = match entity {
                Entity::Country => eci(&m, 1e-8),
                Entity::Product => pci(&m, 1e-8),
            };
            let (index, spec) = match ours {
                Ok(x) => x,
                Err(Error::DegenerateSpectrum(_)) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            let n = index.len() as f64;
            let mean = index.values.iter().sum::<f64>() / n;
            let var = index.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() < 1e-12 && (var.sqrt() - 1.0).abs() < 1e-12);
            assert!(spec.residual < 1e-8);
            let (lambda, z) = oracle(&m, entity);
            assert!((spec.eigenvalue - lambda).abs() < 1e-10, "seed {seed}");
            assert!(common::max_abs_diff(&index.values, &z) < 1e-7, "seed {seed} {entity:?}");
            checked += 1;
        }
    }
    assert!(checked > 80, "only {checked} non-degenerate cases");
}

#[test]
fn coupling_matrices_are_row_stochastic() {
    for seed in 0..100 {
        let mut rng = common::rng(seed);
        let (r, c) = (rng.random_range(2..40), rng.random_range(2..40));
        let density = rng.random_range(0.05..0.9);
        let m = common::random_incidence(&mut rng, r, c, density);
        for entity in [Entity::Country, Entity::Product] {
            let cm = coupling_matrix(&m, entity);
            for s in cm.row_sums() {
                assert!((s - 1.0).abs() < 1e-12, "seed {seed}: row sum {s}");
            }
            assert!(cm.as_slice().iter().all(|&x| x >= 0.0));
        }
    }
}

#[test]
fn indices_are_permutation_invariant() {
    for seed in 0..50 {
        let mut rng = common::rng(500 + seed);
        let m = common::random_incidence(&mut rng, 15, 12, 0.4);
        let rows = common::shuffled(&mut rng, m.n_countries());
        let cols = common::shuffled(&mut rng, m.n_products());
        let p = m.permuted(&rows, &cols);
        for entity in [Entity::Country, Entity::Product] {
            let (a, b) = match entity {
                Entity::Country => (eci(&m, 1e-8), eci(&p, 1e-8)),
                Entity::Product => (pci(&m, 1e-8), pci(&p, 1e-8)),
            };
            match (a, b) {
                (Ok((a, _)), Ok((b, _))) => {
                    for (label, v) in a.iter() {
                        assert!((b.get(label).unwrap() - v).abs() < 1e-12, "seed {seed} {label}");
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => panic!("seed {seed}: {a:?} vs {b:?}"),
            }
        }
    }
}

#[test]
fn reflections_match_direct_sums() {
    let mut rng = common::rng(7);
    let m = common::random_incidence(&mut rng, 9, 7, 0.5);
    let (d, u) = (diversity(&m).values, ubiquity(&m).values);
    let (mut kc, mut kp) = (d.clone(), u.clone());
    for n in 1..=6 {
        let nc: Vec<f64> = (0..m.n_countries())
            .map(|i| (0..m.n_products()).filter(|&j| m.get(i, j)).map(|j| kp[j]).sum::<f64>() / d[i])
            .collect();
        let np: Vec<f64> = (0..m.n_products())
            .map(|j| (0..m.n_countries()).filter(|&i| m.get(i, j)).map(|i| kc[i]).sum::<f64>() / u[j])
            .collect();
        kc = nc;
        kp = np;
        let (c, p) = mr_iterate(&m, n);
        assert!(common::max_abs_diff(&c.values, &kc) < 1e-12);
        assert!(common::max_abs_diff(&p.values, &kp) < 1e-12);
    }
}
