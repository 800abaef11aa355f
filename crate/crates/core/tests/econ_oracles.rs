mod common;

use std::collections::{BTreeMap, BTreeSet};

use ecomplexity_core::data::{PanelObservation, ProductKind};
use ecomplexity_core::econ::{
    growth_regression, ols_fe, pci_service_regression, GrowthVariant, PciObservation, RegressionSpec, StdErrors,
    INTERCEPT, SERVICE_DUMMY,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

const PERIODS: [i32; 10] = [1960, 1965, 1970, 1975, 1980, 1985, 1990, 1995, 2000, 2005];

/// `n_countries × PERIODS` observations; `beta` on `x1`, 0.3 on `x2`,
/// period shifts, and a country random effect so clustering matters.
fn simulate(rng: &mut ChaCha8Rng, n_countries: usize, beta: f64) -> Vec<PanelObservation> {
    let mut out = Vec::new();
    for c in 0..n_countries {
        let effect = 0.5 * normal(rng);
        let x_level = normal(rng);
        for (t, &start) in PERIODS.iter().enumerate() {
            let x1 = x_level + 0.5 * normal(rng);
            let x2 = normal(rng);
            let growth = 1.0 + beta * x1 + 0.3 * x2 + 0.1 * t as f64 + effect + normal(rng);
            out.push(PanelObservation {
                country: format!("C{c:03}"),
                period_start: start,
                period_end: start + 5,
                growth,
                covariates: BTreeMap::from([("x1".to_string(), x1), ("x2".to_string(), x2)]),
                cluster_id: format!("C{c:03}"),
            });
        }
    }
    out
}

struct Oracle {
    beta: DVector<f64>,
    bread: DMatrix<f64>,
    resid: DVector<f64>,
    x: DMatrix<f64>,
}

// Design with intercept, x1, x2 and dummies for every period but the first,
// solved through the normal equations.
fn oracle(panel: &[PanelObservation]) -> Oracle {
    let n = panel.len();
    let k = 3 + PERIODS.len() - 1;
    let x = DMatrix::from_fn(n, k, |i, j| {
        let o = &panel[i];
        match j {
            0 => 1.0,
            1 => o.covariates["x1"],
            2 => o.covariates["x2"],
            _ => f64::from(u8::from(o.period_start == PERIODS[j - 2])),
        }
    });
    let y = DVector::from_iterator(n, panel.iter().map(|o| o.growth));
    let bread = (x.transpose() * &x).try_inverse().unwrap();
    let beta = &bread * x.transpose() * &y;
    let resid = &y - &x * &beta;
    Oracle { beta, bread, resid, x }
}

fn sandwich(o: &Oracle, clusters: &[String]) -> DMatrix<f64> {
    let (n, k) = o.x.shape();
    let groups: BTreeSet<&String> = clusters.iter().collect();
    let mut meat = DMatrix::zeros(k, k);
    for g in &groups {
        let mut s = DVector::zeros(k);
        for i in (0..n).filter(|&i| &clusters[i] == *g) {
            s += o.x.row(i).transpose() * o.resid[i];
        }
        meat += &s * s.transpose();
    }
    let gf = groups.len() as f64;
    let c = gf / (gf - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
    &o.bread * meat * &o.bread * c
}

fn names() -> Vec<String> {
    let mut v = vec![INTERCEPT.to_string(), "x1".into(), "x2".into()];
    v.extend(PERIODS[1..].iter().map(|t| format!("period_{t}")));
    v
}

#[test]
fn clustered_errors_match_sandwich() {
    let panel = simulate(&mut common::rng(42), 50, 0.5);
    assert_eq!(panel.len(), 500);
    let r = ols_fe(&panel, &RegressionSpec::new("growth", &["x1", "x2"])).unwrap();
    assert_eq!(r.std_errors, StdErrors::Clustered { clusters: 50, factor: r_factor(500, 50, 12) });
    let o = oracle(&panel);
    let ids: Vec<String> = panel.iter().map(|p| p.cluster_id.clone()).collect();
    let v = sandwich(&o, &ids);
    let t = StudentsT::new(0.0, 1.0, 49.0).unwrap();
    for (j, name) in names().iter().enumerate() {
        let c = r.coefficient(name).unwrap();
        assert!((c.estimate - o.beta[j]).abs() < 1e-10, "{name}");
        assert!((c.se - v[(j, j)].sqrt()).abs() < 1e-10, "{name}: {} vs {}", c.se, v[(j, j)].sqrt());
        let p = 2.0 * t.sf(c.t_stat.abs());
        assert!((c.p_value - p).abs() < 1e-9, "{name}");
    }
}

fn r_factor(n: usize, g: usize, k: usize) -> f64 {
    (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64)
}

#[test]
fn one_observation_per_cluster_is_hc1() {
    let mut panel = simulate(&mut common::rng(5), 30, 0.5);
    for (i, o) in panel.iter_mut().enumerate() {
        o.cluster_id = format!("obs{i}");
    }
    let r = ols_fe(&panel, &RegressionSpec::new("growth", &["x1", "x2"])).unwrap();
    let o = oracle(&panel);
    let (n, k) = o.x.shape();
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let xi = o.x.row(i).transpose();
        meat += &xi * xi.transpose() * (o.resid[i] * o.resid[i]);
    }
    let hc1 = &o.bread * meat * &o.bread * (n as f64 / (n - k) as f64);
    for (j, name) in names().iter().enumerate() {
        assert!((r.se(name).unwrap() - hc1[(j, j)].sqrt()).abs() < 1e-10);
    }
}

#[test]
fn period_dummies_equal_within_period_demeaning() {
    let panel = simulate(&mut common::rng(11), 50, 0.5);
    let r = ols_fe(&panel, &RegressionSpec::new("growth", &["x1", "x2"])).unwrap();
    let mut means: BTreeMap<i32, (f64, f64, f64, f64)> = BTreeMap::new();
    for o in &panel {
        let e = means.entry(o.period_start).or_default();
        e.0 += o.growth;
        e.1 += o.covariates["x1"];
        e.2 += o.covariates["x2"];
        e.3 += 1.0;
    }
    let n = panel.len();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        let o = &panel[i];
        let m = means[&o.period_start];
        if j == 0 { o.covariates["x1"] - m.1 / m.3 } else { o.covariates["x2"] - m.2 / m.3 }
    });
    let y = DVector::from_iterator(n, panel.iter().map(|o| o.growth - means[&o.period_start].0 / means[&o.period_start].3));
    let b = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * y;
    assert!((r.estimate("x1").unwrap() - b[0]).abs() < 1e-10);
    assert!((r.estimate("x2").unwrap() - b[1]).abs() < 1e-10);
}

#[test]
fn information_criteria_match_gaussian_likelihood() {
    let panel = simulate(&mut common::rng(3), 40, 0.5);
    let r = ols_fe(&panel, &RegressionSpec::new("growth", &["x1", "x2"])).unwrap();
    let o = oracle(&panel);
    let n = panel.len() as f64;
    let s2 = o.resid.iter().map(|u| u * u).sum::<f64>() / n;
    let ll: f64 = o
        .resid
        .iter()
        .map(|u| -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - u * u / (2.0 * s2))
        .sum();
    let k = r.n_params as f64;
    assert!((r.info.log_likelihood - ll).abs() < 1e-8);
    assert!((r.info.aic - (-2.0 * ll + 2.0 * k) / n).abs() < 1e-10);
    assert!((r.info.bic - (-2.0 * ll + k * n.ln()) / n).abs() < 1e-10);
    assert!((r.info.hq - (-2.0 * ll + 2.0 * k * n.ln().ln()) / n).abs() < 1e-10);

    // An irrelevant extra regressor can only cost BIC more than AIC.
    let mut noisy = panel.clone();
    let mut rng = common::rng(99);
    for o in &mut noisy {
        o.covariates.insert("junk".into(), normal(&mut rng));
    }
    let big = ols_fe(&noisy, &RegressionSpec::new("growth", &["x1", "x2", "junk"])).unwrap();
    assert!(big.info.log_likelihood >= r.info.log_likelihood);
    assert!(big.info.bic - r.info.bic > big.info.aic - r.info.aic);
}

#[test]
fn simulated_slope_is_recovered() {
    let mut hits = 0;
    for seed in 0..100 {
        let panel = simulate(&mut common::rng(10_000 + seed), 50, 0.5);
        let r = ols_fe(&panel, &RegressionSpec::new("growth", &["x1", "x2"])).unwrap();
        let c = r.coefficient("x1").unwrap();
        if (c.estimate - 0.5).abs() <= 3.0 * c.se {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn real_effects_are_detected() {
    let mut rejections = 0;
    for seed in 0..200 {
        let panel = simulate(&mut common::rng(20_000 + seed), 50, 0.5);
        let col = growth_regression(&panel, &["x1"], &["x2"], &GrowthVariant::Standard).unwrap();
        if col.result.coefficient("x1").unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    assert!(rejections >= 180, "{rejections}/200");
}

fn pci_panel(rng: &mut ChaCha8Rng, shift: f64, noise: f64) -> Vec<PciObservation> {
    let mut rows = Vec::new();
    for year in 2000..2008 {
        for j in 0..60 {
            let service = j % 4 == 0;
            let base = (j as f64 / 60.0) - 0.5 + 0.05 * f64::from(year - 2000);
            rows.push(PciObservation {
                year,
                product: format!("P{j:02}"),
                pci: base + if service { shift } else { 0.0 } + noise * normal(rng),
                kind: if service { ProductKind::Service } else { ProductKind::Good },
            });
        }
    }
    rows
}

#[test]
fn service_shift_recovered() {
    // Product offsets are balanced across kinds, so the noiseless shift is exact.
    let mut rows = Vec::new();
    for year in 2000..2005 {
        for j in 0..10 {
            for (kind, add) in [(ProductKind::Good, 0.0), (ProductKind::Service, 1.0)] {
                rows.push(PciObservation {
                    year,
                    product: format!("{kind:?}{j}"),
                    pci: j as f64 * 0.1 + 0.02 * f64::from(year - 2000) + add,
                    kind,
                });
            }
        }
    }
    let r = pci_service_regression(&rows).unwrap();
    assert!((r.estimate(SERVICE_DUMMY).unwrap() - 1.0).abs() < 1e-12);

    let mut within = 0;
    for seed in 0..50 {
        let rows = pci_panel(&mut common::rng(seed), 1.0, 0.5);
        let r = pci_service_regression(&rows).unwrap();
        let c = r.coefficient(SERVICE_DUMMY).unwrap();
        if (c.estimate - 1.0).abs() <= 3.0 * c.se {
            within += 1;
        }
    }
    assert!(within >= 47, "{within}/50");
}

#[test]
fn no_period_effects_variant_uses_ordinary_errors() {
    let panel = simulate(&mut common::rng(8), 20, 0.5);
    let col = growth_regression(&panel, &["x1"], &["x2"], &GrowthVariant::NoPeriodEffects).unwrap();
    assert!(!col.period_effects);
    assert_eq!(col.result.std_errors, StdErrors::Ordinary);
    let n = panel.len();
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => panel[i].covariates["x1"],
        _ => panel[i].covariates["x2"],
    });
    let y = DVector::from_iterator(n, panel.iter().map(|o| o.growth));
    let bread = (x.transpose() * &x).try_inverse().unwrap();
    let b = &bread * x.transpose() * &y;
    let u = &y - &x * &b;
    let s2 = u.dot(&u) / (n - 3) as f64;
    assert!((col.result.se("x1").unwrap() - (s2 * bread[(1, 1)]).sqrt()).abs() < 1e-10);
    let extra = growth_regression(&panel, &["x1"], &[], &GrowthVariant::ExtraControl("x2".into())).unwrap();
    assert!(extra.result.coefficient("x2").is_some());
    assert_eq!(extra.result.fe_estimates.len(), PERIODS.len());
}

#[test]
fn rescaling_a_regressor_rescales_its_coefficient() {
    let panel = simulate(&mut common::rng(21), 30, 0.5);
    let spec = RegressionSpec::new("growth", &["x1", "x2"]);
    let base = ols_fe(&panel, &spec).unwrap();
    for (a, b) in [(3.0, 0.0), (0.25, 7.0), (-2.0, 1.5)] {
        let moved: Vec<PanelObservation> = panel
            .iter()
            .cloned()
            .map(|mut o| {
                let x = o.covariates["x1"];
                o.covariates.insert("x1".into(), a * x + b);
                o
            })
            .collect();
        let r = ols_fe(&moved, &spec).unwrap();
        assert!((r.r_squared - base.r_squared).abs() < 1e-12);
        let (c0, c1) = (base.coefficient("x1").unwrap(), r.coefficient("x1").unwrap());
        assert!((c1.estimate * a - c0.estimate).abs() < 1e-10);
        assert!((c1.t_stat.abs() - c0.t_stat.abs()).abs() < 1e-8);
        assert_eq!(c1.stars, c0.stars);
    }
}
