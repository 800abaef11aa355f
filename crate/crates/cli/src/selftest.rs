//! Built-in invariant suite: fixtures plus seeded random matrices.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use ecomplexity_core::data::{ExportMatrix, PanelObservation};
use ecomplexity_core::econ::{ols_fe, RegressionSpec};
use ecomplexity_core::fitness::{fcm, mfcm, FitnessConfig, FitnessIteration, Method, Verdict};
use ecomplexity_core::rca::{binarize, rca, IncidenceMatrix, Threshold};
use ecomplexity_core::reflections::{coupling_matrix, eci, pci};
use ecomplexity_core::stats::{box_stats, rank, spearman, Direction};
use ecomplexity_core::{Entity, Metric, ScoreVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{PipelineConfig, Settings};
use crate::pipeline::run_pipeline;
use crate::synth::{synthetic_panel, write_panel};

/// Deliberate corruption used to prove a check can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs fitness iterates before the normalisation check sees them.
    Normalization,
}

impl Fault {
    pub fn parse(s: &str) -> Option<Fault> {
        (s == "normalization").then_some(Fault::Normalization)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

impl CheckResult {
    pub fn line(&self) -> String {
        match &self.outcome {
            Ok(()) => format!("PASS {}", self.name),
            Err(e) => format!("FAIL {}: {e}", self.name),
        }
    }
}

type Check = fn(Option<Fault>) -> Result<(), String>;

const CHECKS: &[(&str, Check)] = &[
    ("rca_rank_one", rca_rank_one),
    ("rca_scale_invariance", rca_scale_invariance),
    ("coupling_row_stochastic", coupling_row_stochastic),
    ("eci_triangular_fixture", eci_triangular_fixture),
    ("spectral_permutation_invariance", spectral_permutation_invariance),
    ("fitness_normalization", fitness_normalization),
    ("mfcm_steady_state_bounds", mfcm_steady_state_bounds),
    ("fcm_zero_convergence", fcm_zero_convergence),
    ("mfcm_boundary_drift", mfcm_boundary_drift),
    ("spearman_fixture", spearman_fixture),
    ("spearman_monotone_invariance", spearman_monotone_invariance),
    ("box_stats_affine_invariance", box_stats_affine_invariance),
    ("period_dummies_match_demeaning", period_dummies_match_demeaning),
    ("pipeline_determinism", pipeline_determinism),
];

pub fn run_selftest(fault: Option<Fault>) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| CheckResult {
            name,
            outcome: check(fault),
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_incidence(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> IncidenceMatrix {
    loop {
        let bits: Vec<Vec<u8>> = (0..rows)
            .map(|_| (0..cols).map(|_| u8::from(rng.random_bool(density))).collect())
            .collect();
        let rows_kept: Vec<Vec<u8>> = bits.into_iter().filter(|r| r.contains(&1)).collect();
        let cols_kept: Vec<usize> = (0..cols).filter(|&j| rows_kept.iter().any(|r| r[j] == 1)).collect();
        if rows_kept.len() < 2 || cols_kept.len() < 2 {
            continue;
        }
        let m: Vec<Vec<u8>> = rows_kept
            .iter()
            .map(|r| cols_kept.iter().map(|&j| r[j]).collect())
            .collect();
        return IncidenceMatrix::from_rows(&m).expect("pruned matrix");
    }
}

fn rca_rank_one(_: Option<Fault>) -> Result<(), String> {
    for seed in 0..20 {
        let mut r = rng(seed);
        let a: Vec<f64> = (0..12).map(|_| r.random_range(0.1..1e4)).collect();
        let b: Vec<f64> = (0..9).map(|_| r.random_range(0.1..1e4)).collect();
        let e: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect();
        let m = rca(&ExportMatrix::from_rows(&e).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let worst = m.values.as_slice().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        ensure(worst < 1e-12, || format!("seed {seed}: |RCA-1| = {worst:e}"))?;
    }
    Ok(())
}

fn rca_scale_invariance(_: Option<Fault>) -> Result<(), String> {
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let e: Vec<Vec<f64>> = (0..8).map(|_| (0..6).map(|_| r.random_range(0.0..50.0)).collect()).collect();
        let k = r.random_range(1e-3..1e3);
        let scaled: Vec<Vec<f64>> = e.iter().map(|row| row.iter().map(|v| v * k).collect()).collect();
        let a = rca(&ExportMatrix::from_rows(&e).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let b = rca(&ExportMatrix::from_rows(&scaled).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for (x, y) in a.values.as_slice().iter().zip(b.values.as_slice()) {
            ensure((x - y).abs() < 1e-12 * x.max(1.0), || format!("seed {seed}: {x} vs {y}"))?;
        }
        if a.values.as_slice().iter().all(|v| (v - 1.0).abs() > 1e-9) {
            let ma = binarize(&a, Threshold::default()).map(|x| x.0).ok();
            let mb = binarize(&b, Threshold::default()).map(|x| x.0).ok();
            ensure(ma == mb, || format!("seed {seed}: incidence changed under scaling"))?;
        }
    }
    Ok(())
}

fn coupling_row_stochastic(_: Option<Fault>) -> Result<(), String> {
    for seed in 0..20 {
        let m = random_incidence(&mut rng(200 + seed), 20, 15, 0.3);
        for entity in [Entity::Country, Entity::Product] {
            for s in coupling_matrix(&m, entity).row_sums() {
                ensure((s - 1.0).abs() < 1e-12, || format!("seed {seed}: row sum {s}"))?;
            }
        }
    }
    Ok(())
}

fn eci_triangular_fixture(_: Option<Fault>) -> Result<(), String> {
    let m = IncidenceMatrix::from_rows(&[[1u8, 1, 1], [1, 1, 0], [1, 0, 0]]).expect("fixture");
    let (index, spec) = eci(&m, 1e-9).map_err(|e| e.to_string())?;
    ensure((spec.eigenvalue - 0.25).abs() < 1e-12, || format!("lambda2 = {}", spec.eigenvalue))?;
    let want = [1.0, 0.0, -1.0];
    for (got, w) in index.values.iter().zip(want) {
        ensure((got - w).abs() < 1e-9, || format!("ECI {:?}", index.values))?;
    }
    Ok(())
}

fn spectral_permutation_invariance(_: Option<Fault>) -> Result<(), String> {
    for seed in 0..10 {
        let mut r = rng(300 + seed);
        let m = random_incidence(&mut r, 15, 12, 0.4);
        let mut rows: Vec<usize> = (0..m.n_countries()).collect();
        let mut cols: Vec<usize> = (0..m.n_products()).collect();
        rows.shuffle(&mut r);
        cols.shuffle(&mut r);
        let p = m.permuted(&rows, &cols);
        for (a, b) in [(eci(&m, 1e-8), eci(&p, 1e-8)), (pci(&m, 1e-8), pci(&p, 1e-8))] {
            let (Ok((a, _)), Ok((b, _))) = (a, b) else { continue };
            for (label, v) in a.iter() {
                let w = b.get(label).unwrap_or(f64::NAN);
                ensure((v - w).abs() < 1e-12, || format!("seed {seed}, {label}: {v} vs {w}"))?;
            }
        }
        let cfg = FitnessConfig::default();
        let (a, b) = (mfcm(&m, &cfg).map_err(|e| e.to_string())?, mfcm(&p, &cfg).map_err(|e| e.to_string())?);
        for (label, v) in a.country_scores.iter() {
            let w = b.country_scores.get(label).unwrap_or(f64::NAN);
            ensure((v - w).abs() < 1e-12, || format!("seed {seed}, fitness {label}: {v} vs {w}"))?;
        }
    }
    Ok(())
}

fn fitness_normalization(fault: Option<Fault>) -> Result<(), String> {
    for seed in 0..10 {
        let m = random_incidence(&mut rng(400 + seed), 12, 10, 0.4);
        for method in [Method::Fcm, Method::Mfcm] {
            let mut it = FitnessIteration::new(&m, method);
            for step in 1..=50 {
                it.step().map_err(|e| e.to_string())?;
                let mut c = it.countries().to_vec();
                if fault == Some(Fault::Normalization) {
                    c[0] *= 1.0 + 1e-6;
                }
                let sc: f64 = c.iter().sum();
                let sp: f64 = it.products().iter().sum();
                let (nc, np) = (m.n_countries() as f64, m.n_products() as f64);
                ensure((sc - nc).abs() < 1e-12 * nc && (sp - np).abs() < 1e-12 * np, || {
                    format!("{method} seed {seed} step {step}: sums {sc} / {sp}, want {nc} / {np}")
                })?;
                ensure(c.iter().chain(it.products()).all(|&x| x > 0.0), || {
                    format!("{method} seed {seed} step {step}: nonpositive score")
                })?;
            }
        }
    }
    Ok(())
}

fn mfcm_steady_state_bounds(_: Option<Fault>) -> Result<(), String> {
    let cfg = FitnessConfig::default();
    for seed in 0..20 {
        let m = random_incidence(&mut rng(500 + seed), 20, 15, 0.4);
        let r = mfcm(&m, &cfg).map_err(|e| e.to_string())?;
        if r.verdict != Verdict::Converged {
            continue;
        }
        let nc = m.n_countries() as f64;
        ensure(r.country_scores.values.iter().all(|&c| c > 0.0 && c < nc), || {
            format!("seed {seed}: score outside (0, N_c)")
        })?;
        for (j, u) in m.ubiquity_counts().into_iter().enumerate() {
            ensure(r.product_raw[j] >= 1.0 / (nc * u as f64), || format!("seed {seed}: product {j} below bound"))?;
        }
    }
    Ok(())
}

fn nested() -> IncidenceMatrix {
    IncidenceMatrix::from_rows(&[[1u8, 1], [0, 1]]).expect("fixture")
}

fn fcm_zero_convergence(_: Option<Fault>) -> Result<(), String> {
    let cfg = FitnessConfig {
        zero_floor: 1e-3,
        max_iter: 10_000,
        ..FitnessConfig::default()
    };
    let r = fcm(&nested(), &cfg).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::ZeroConvergence, || format!("verdict {}", r.verdict))
}

fn mfcm_boundary_drift(_: Option<Fault>) -> Result<(), String> {
    let m = nested();
    let mut it = FitnessIteration::new(&m, Method::Mfcm);
    let mut x = 4.0 / 3.0;
    for n in 1..=50 {
        it.step().map_err(|e| e.to_string())?;
        let c = it.countries()[0];
        ensure((c - x).abs() < 1e-10, || format!("step {n}: {c} vs {x}"))?;
        x = (4.0 - x) / (3.0 - x);
    }
    let r = mfcm(&m, &FitnessConfig::default()).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::BoundaryDrift, || format!("verdict {}", r.verdict))
}

fn scores(values: Vec<f64>) -> ScoreVector {
    let labels = (0..values.len()).map(|i| format!("x{i:03}")).collect();
    ScoreVector::new(Entity::Country, Metric::Eci, labels, values)
}

fn spearman_fixture(_: Option<Fault>) -> Result<(), String> {
    let a = rank(&scores(vec![1.0, 2.0, 3.0, 4.0]), Direction::Ascending);
    let b = rank(&scores(vec![1.0, 3.0, 2.0, 4.0]), Direction::Ascending);
    let rho = spearman(&a, &b).map_err(|e| e.to_string())?;
    ensure(rho == 0.8, || format!("rho = {rho}"))
}

fn spearman_monotone_invariance(_: Option<Fault>) -> Result<(), String> {
    for seed in 0..20 {
        let mut r = rng(600 + seed);
        let x: Vec<f64> = (0..25).map(|_| r.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..25).map(|_| r.random_range(-3.0..3.0)).collect();
        let ry = rank(&scores(y), Direction::Descending);
        let a = spearman(&rank(&scores(x.clone()), Direction::Descending), &ry).map_err(|e| e.to_string())?;
        let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let b = spearman(&rank(&scores(ex), Direction::Descending), &ry).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("seed {seed}: {a} vs {b}"))?;
    }
    Ok(())
}

fn box_stats_affine_invariance(_: Option<Fault>) -> Result<(), String> {
    for seed in 0..20 {
        let mut r = rng(700 + seed);
        let mut v: Vec<f64> = (0..30).map(|_| r.random_range(-1.0..1.0)).collect();
        v.push(25.0);
        let a = box_stats(&scores(v.clone())).map_err(|e| e.to_string())?;
        let b = box_stats(&scores(v.iter().map(|x| 3.0 * x - 7.0).collect())).map_err(|e| e.to_string())?;
        ensure(a.outliers == b.outliers, || format!("seed {seed}: outlier sets differ"))?;
        ensure((b.median - (3.0 * a.median - 7.0)).abs() < 1e-12, || format!("seed {seed}: median"))?;
    }
    Ok(())
}

fn period_dummies_match_demeaning(_: Option<Fault>) -> Result<(), String> {
    let mut r = rng(800);
    let mut panel = Vec::new();
    for c in 0..20 {
        for t in [1990, 2000] {
            let x: f64 = r.random_range(-1.0..1.0);
            let shift = if t == 2000 { 0.4 } else { 0.0 };
            panel.push(PanelObservation {
                country: format!("C{c}"),
                period_start: t,
                period_end: t + 10,
                growth: 0.2 + 0.7 * x + shift + 0.1 * r.random_range(-1.0..1.0),
                covariates: [("x".to_string(), x)].into_iter().collect(),
                cluster_id: format!("C{c}"),
            });
        }
    }
    let fe = ols_fe(&panel, &RegressionSpec::new("growth", &["x"])).map_err(|e| e.to_string())?;
    // Within-period demeaning, slope by hand.
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for t in [1990, 2000] {
        let obs: Vec<&PanelObservation> = panel.iter().filter(|o| o.period_start == t).collect();
        let n = obs.len() as f64;
        let mx = obs.iter().map(|o| o.covariates["x"]).sum::<f64>() / n;
        let my = obs.iter().map(|o| o.growth).sum::<f64>() / n;
        for o in obs {
            sxy += (o.covariates["x"] - mx) * (o.growth - my);
            sxx += (o.covariates["x"] - mx).powi(2);
        }
    }
    let b = fe.estimate("x").unwrap_or(f64::NAN);
    ensure((b - sxy / sxx).abs() < 1e-10, || format!("{b} vs {}", sxy / sxx))
}

static SCRATCH: AtomicUsize = AtomicUsize::new(0);

fn scratch_dir() -> PathBuf {
    let n = SCRATCH.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("ecomplexity-selftest-{}-{n}", std::process::id()))
}

fn pipeline_determinism(_: Option<Fault>) -> Result<(), String> {
    let root = scratch_dir();
    let result = (|| {
        let panel = synthetic_panel(30, 12, 2000..2003, 7);
        let files = write_panel(&panel, &root.join("input")).map_err(|e| e.to_string())?;
        let mut trees = Vec::new();
        for run in ["a", "b"] {
            let mut s = Settings::default();
            s.set("trade", files.trade.display().to_string()).map_err(|e| e.to_string())?;
            s.set("kinds", files.kinds.display().to_string()).map_err(|e| e.to_string())?;
            s.set("metric", "eci,mfcm").map_err(|e| e.to_string())?;
            s.set("out", root.join(run).display().to_string()).map_err(|e| e.to_string())?;
            let cfg = PipelineConfig::from_settings(&s).map_err(|e| e.to_string())?;
            run_pipeline(&cfg).map_err(|e| e.to_string())?;
            let mut names: Vec<PathBuf> = std::fs::read_dir(root.join(run))
                .map_err(|e| e.to_string())?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            names.sort();
            let tree: Vec<(String, Vec<u8>)> = names
                .iter()
                .map(|p| (p.file_name().unwrap_or_default().to_string_lossy().into_owned(), std::fs::read(p).unwrap_or_default()))
                .collect();
            trees.push(tree);
        }
        ensure(trees[0] == trees[1], || "two runs produced different bytes".into())
    })();
    let _ = std::fs::remove_dir_all(&root);
    result
}
