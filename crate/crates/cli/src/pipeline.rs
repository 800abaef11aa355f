//! The per-year pipeline and the cross-year tables built from it.
//!
//! Years are computed on a bounded worker pool; every file is produced in
//! memory and written afterwards by one writer, in year order, so the output
//! directory and manifest are byte-identical across runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ecomplexity_core::data::{align_panel, build_export_matrix, nr_export_increase, ProductKind, Series, TradeTable, LOG_INITIAL_GDP};
use ecomplexity_core::econ::{
    growth_regression, partial_correlation, pci_service_regression, standardized_coefficient, GrowthVariant,
    PciObservation, RegressionTable, TableColumn, CLUSTER_CORRECTION,
};
use ecomplexity_core::fitness::{run, FixedPointResult, Method};
use ecomplexity_core::rca::{binarize, concatenated_rca, rca, IncidenceMatrix, RcaVariant};
use ecomplexity_core::reflections::{diversity, eci, pci, ubiquity, SpectralResult};
use ecomplexity_core::stats::{box_stats, rank, spearman, Direction};
use ecomplexity_core::{Error as CoreError, ScoreVector};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{PipelineConfig, Source};
use crate::error::CliError;
use crate::fmt::num;
use crate::io;

pub const DEFAULT_FIXTURE_YEAR: i32 = 2000;

/// Scores kept per year for the cross-year tables, in output order.
const SERIES: &[&str] = &[
    "diversity",
    "eci",
    "pci",
    "fitness_fcm",
    "complexity_fcm",
    "fitness_mfcm",
    "complexity_mfcm",
];

const COMPARISONS: &[(&str, &str)] = &[
    ("eci", "fitness_mfcm"),
    ("eci", "fitness_fcm"),
    ("eci", "diversity"),
    ("pci", "complexity_mfcm"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    /// 0 when every stage succeeded, 2 when some computation refused its
    /// input. Fitness verdicts never change it.
    pub exit_code: i32,
    pub years: Vec<i32>,
    pub failures: Vec<String>,
    /// `(year, stage) → ok | verdict | failed`.
    pub stages: BTreeMap<(i32, String), String>,
    pub files: Vec<String>,
}

struct Inputs {
    table: Option<TradeTable>,
    fixed: Option<IncidenceMatrix>,
    kinds: BTreeMap<String, ProductKind>,
    duplicates: usize,
    /// Trade records dropped by the allow-list.
    disallowed: Option<usize>,
    files: Vec<PathBuf>,
}

#[derive(Default)]
struct YearOutput {
    year: i32,
    files: Vec<(String, Vec<u8>)>,
    failures: Vec<String>,
    stages: BTreeMap<String, String>,
    scores: BTreeMap<&'static str, ScoreVector>,
    kinds: BTreeMap<String, ProductKind>,
}

impl YearOutput {
    fn fail(&mut self, stage: &str, err: &CoreError) -> Value {
        self.failures.push(format!("{} {stage}: {err}", self.year));
        self.stages.insert(stage.to_string(), "failed".into());
        json!({ "status": "failed", "error": err.to_string() })
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, CliError> {
    let inputs = load_inputs(cfg)?;
    let years = select_years(cfg, &inputs)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let outputs: Vec<YearOutput> = pool.install(|| years.par_iter().map(|&y| process_year(cfg, &inputs, y)).collect());

    let mut out = Output::new(&cfg.out_dir)?;
    let mut failures = Vec::new();
    let mut stages = BTreeMap::new();
    let mut notes = Vec::new();
    for y in &outputs {
        for (name, bytes) in &y.files {
            out.put(name, bytes)?;
        }
        failures.extend(y.failures.iter().cloned());
        for (stage, status) in &y.stages {
            stages.insert((y.year, stage.clone()), status.clone());
        }
    }

    let series = collect_series(&outputs);
    out.put("rankings.csv", &rankings_csv(&series))?;
    out.put("spearman.csv", &spearman_csv(&series))?;
    out.put("rank_stability.csv", &stability_csv(&series))?;
    out.put("box_stats.csv", &box_stats_csv(&series))?;

    if cfg.gdp.is_some() {
        match &inputs.table {
            Some(table) => growth_tables(cfg, table, &inputs.kinds, &series, &mut out, &mut failures, &mut notes)?,
            None => notes.push("growth regressions need trade input; skipped".to_string()),
        }
    }
    if inputs.kinds.values().any(|k| *k == ProductKind::Service) {
        service_table(&outputs, &series, &mut out, &mut failures)?;
    }

    let exit_code = if failures.is_empty() { 0 } else { 2 };
    let mut year_map = Map::new();
    for y in &outputs {
        year_map.insert(y.year.to_string(), json!(y.stages));
    }
    let input_hashes: Vec<Value> = inputs
        .files
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| CliError::io(p, e))?;
            Ok(json!({ "path": p.display().to_string(), "sha256": sha256(&bytes) }))
        })
        .collect::<Result<_, CliError>>()?;
    let manifest = json!({
        "config_hash": cfg.config_hash,
        "inputs": input_hashes,
        "duplicates_summed": inputs.duplicates,
        "records_outside_allow_list": inputs.disallowed,
        "years": year_map,
        "failures": failures,
        "notes": notes,
        "metadata": {
            "float_format": "12 significant digits",
            "rank_correlation": "Spearman as Pearson on average ranks over shared labels",
            "quartiles": "Tukey hinges, fences at 1.5 IQR",
            "rca_threshold": format!("{} {}", if cfg.threshold.strict { ">" } else { ">=" }, num(cfg.threshold.value)),
            "rca_variant": cfg.rca_variant.to_string(),
        },
        "files": out.entries.iter().map(|(p, h)| json!({ "path": p, "sha256": h })).collect::<Vec<_>>(),
        "exit_code": exit_code,
    });
    let files: Vec<String> = out.entries.iter().map(|(p, _)| p.clone()).collect();
    out.put_unlisted("manifest.json", &pretty(&manifest))?;

    Ok(PipelineReport {
        exit_code,
        years,
        failures,
        stages,
        files,
    })
}

fn load_inputs(cfg: &PipelineConfig) -> Result<Inputs, CliError> {
    let mut files = Vec::new();
    let kinds = match &cfg.kinds {
        Some(p) => {
            files.push(p.clone());
            io::parse_kinds(io::open(p)?).map_err(|e| CliError::parse(p, e))?
        }
        None => BTreeMap::new(),
    };
    let mut disallowed = None;
    let (table, fixed, duplicates) = match &cfg.source {
        Source::Trade(p) => {
            files.push(p.clone());
            let (mut table, dups) =
                io::parse_trade_csv(io::open(p)?, &p.display().to_string()).map_err(|e| CliError::parse(p, e))?;
            if let Some(a) = &cfg.allow_list {
                files.push(a.clone());
                let allowed = io::parse_allow_list(io::open(a)?).map_err(|e| CliError::parse(a, e))?;
                disallowed = Some(table.retain_countries(&allowed));
            }
            (Some(table), None, dups)
        }
        Source::Incidence(p) => {
            files.push(p.clone());
            let m = io::parse_incidence(io::open(p)?).map_err(|e| CliError::parse(p, e))?;
            (None, Some(m), 0)
        }
        Source::Fixture(f) => (None, Some(f.matrix()), 0),
    };
    for p in cfg.gdp.iter().chain(cfg.covariates.values()).chain(cfg.exclusions.iter()) {
        files.push(p.clone());
    }
    Ok(Inputs {
        table,
        fixed,
        kinds,
        duplicates,
        disallowed,
        files,
    })
}

fn select_years(cfg: &PipelineConfig, inputs: &Inputs) -> Result<Vec<i32>, CliError> {
    match (&inputs.table, &cfg.source) {
        (Some(table), Source::Trade(path)) => {
            let years: Vec<i32> = table
                .years()
                .into_iter()
                .filter(|y| cfg.years.is_none_or(|(a, b)| (a..=b).contains(y)))
                .collect();
            if years.is_empty() {
                return Err(CliError::input(path, "no records in the requested years"));
            }
            Ok(years)
        }
        _ => Ok(vec![cfg.years.map_or(DEFAULT_FIXTURE_YEAR, |(a, _)| a)]),
    }
}

fn process_year(cfg: &PipelineConfig, inputs: &Inputs, year: i32) -> YearOutput {
    let mut out = YearOutput {
        year,
        ..YearOutput::default()
    };
    let mut diag = Map::new();
    diag.insert("year".into(), json!(year));

    let m = match (&inputs.fixed, &inputs.table) {
        (Some(m), _) => Ok(m.clone().with_year(year)),
        (None, Some(table)) => incidence_for_year(cfg, table, &inputs.kinds, year, &mut out, &mut diag),
        (None, None) => unreachable!("one source is always loaded"),
    };
    let m = match m {
        Ok(m) => m,
        Err(e) => {
            let v = out.fail("incidence", &e);
            diag.insert("incidence".into(), v);
            let bytes = pretty(&Value::Object(diag));
            out.files.push((format!("diagnostics_{year}.json"), bytes));
            return out;
        }
    };
    out.stages.insert("incidence".into(), "ok".into());
    diag.insert(
        "incidence".into(),
        json!({
            "status": "ok",
            "countries": m.n_countries(),
            "products": m.n_products(),
            "links": m.link_count(),
        }),
    );
    out.kinds = m.products().iter().cloned().zip(m.kinds().iter().copied()).collect();
    out.files.push((format!("incidence_{year}.csv"), io::incidence_csv(&m)));

    let d = diversity(&m);
    let u = ubiquity(&m);
    out.files.push((format!("diversity_{year}.csv"), io::scores_csv(&d)));
    out.files.push((format!("ubiquity_{year}.csv"), io::scores_csv(&u)));
    out.scores.insert("diversity", d);

    if cfg.metrics.eci {
        for (stage, result) in [("eci", eci(&m, cfg.spectral_tol)), ("pci", pci(&m, cfg.spectral_tol))] {
            let v = match result {
                Ok((scores, spec)) => {
                    out.files.push((format!("{stage}_{year}.csv"), io::scores_csv(&scores)));
                    out.scores.insert(stage, scores);
                    out.stages.insert(stage.into(), "ok".into());
                    spectral_json(&spec)
                }
                Err(e) => out.fail(stage, &e),
            };
            diag.insert(stage.into(), v);
        }
    }

    for (enabled, method) in [(cfg.metrics.fcm, Method::Fcm), (cfg.metrics.mfcm, Method::Mfcm)] {
        if !enabled {
            continue;
        }
        let stage = method.to_string();
        let v = match run(&m, method, &cfg.fitness) {
            Ok(r) => {
                out.files.push((format!("fitness_{stage}_{year}.csv"), io::scores_csv(&r.country_scores)));
                out.files.push((format!("complexity_{stage}_{year}.csv"), io::scores_csv(&r.product_scores)));
                out.stages.insert(stage.clone(), r.verdict.to_string());
                let v = fitness_json(&r);
                let (fk, ck) = match method {
                    Method::Fcm => ("fitness_fcm", "complexity_fcm"),
                    Method::Mfcm => ("fitness_mfcm", "complexity_mfcm"),
                };
                out.scores.insert(fk, r.country_scores);
                out.scores.insert(ck, r.product_scores);
                v
            }
            Err(e) => out.fail(&stage, &e),
        };
        diag.insert(stage, v);
    }

    let bytes = pretty(&Value::Object(diag));
    out.files.push((format!("diagnostics_{year}.json"), bytes));
    out
}

fn incidence_for_year(
    cfg: &PipelineConfig,
    table: &TradeTable,
    kinds: &BTreeMap<String, ProductKind>,
    year: i32,
    out: &mut YearOutput,
    diag: &mut Map<String, Value>,
) -> Result<IncidenceMatrix, CoreError> {
    let (ex, dropped) = build_export_matrix(table, year)?;
    let ex = ex.with_kinds(kinds);
    diag.insert(
        "export_pruned".into(),
        json!({ "countries": dropped.countries, "products": dropped.products }),
    );
    let r = match cfg.rca_variant {
        RcaVariant::Joint => rca(&ex)?,
        RcaVariant::Concatenated => concatenated_rca(&ex)?,
    };
    out.files.push((format!("rca_{year}.csv"), io::matrix_csv(&r.countries, &r.products, &r.values)));
    let (m, pruned) = binarize(&r, cfg.threshold)?;
    diag.insert(
        "incidence_pruned".into(),
        json!({ "countries": pruned.countries, "products": pruned.products }),
    );
    Ok(m)
}

fn spectral_json(s: &SpectralResult) -> Value {
    json!({
        "status": "ok",
        "eigenvalue": s.eigenvalue,
        "next_eigenvalue": s.next_eigenvalue,
        "residual": s.residual,
        "orientation_sign": s.orientation_sign,
    })
}

fn fitness_json(r: &FixedPointResult) -> Value {
    json!({
        "status": "ok",
        "verdict": r.verdict.to_string(),
        "iterations": r.iterations,
        "residual": r.residual,
        "trajectory": r.trajectory,
    })
}

type SeriesMap = BTreeMap<&'static str, BTreeMap<i32, ScoreVector>>;

fn collect_series(outputs: &[YearOutput]) -> SeriesMap {
    let mut series = SeriesMap::new();
    for y in outputs {
        for (name, s) in &y.scores {
            series.entry(*name).or_default().insert(y.year, s.clone());
        }
    }
    series
}

fn ordered(series: &SeriesMap) -> impl Iterator<Item = (&'static str, &BTreeMap<i32, ScoreVector>)> {
    SERIES.iter().filter_map(|name| series.get(name).map(|s| (*name, s)))
}

fn rankings_csv(series: &SeriesMap) -> Vec<u8> {
    let mut out = String::from("metric,year,label,rank\n");
    for (name, by_year) in ordered(series) {
        for (year, scores) in by_year {
            let r = rank(scores, Direction::Descending);
            let mut rows: Vec<(f64, &String)> = r.ranks.iter().copied().zip(&r.labels).collect();
            rows.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
            for (rk, label) in rows {
                out.push_str(&format!("{name},{year},{},{}\n", io::csv_field(label), num(rk)));
            }
        }
    }
    out.into_bytes()
}

fn rho_cells(a: &ScoreVector, b: &ScoreVector) -> (String, usize) {
    let (ra, rb) = (rank(a, Direction::Descending), rank(b, Direction::Descending));
    let n = ra.labels.iter().filter(|l| rb.get(l).is_some()).count();
    match spearman(&ra, &rb) {
        Ok(rho) => (num(rho), n),
        Err(_) => ("NaN".into(), n),
    }
}

fn spearman_csv(series: &SeriesMap) -> Vec<u8> {
    let mut out = String::from("left,right,year,rho,n\n");
    for (left, right) in COMPARISONS {
        let (Some(a), Some(b)) = (series.get(left), series.get(right)) else { continue };
        for (year, sa) in a {
            let Some(sb) = b.get(year) else { continue };
            let (rho, n) = rho_cells(sa, sb);
            out.push_str(&format!("{left},{right},{year},{rho},{n}\n"));
        }
    }
    out.into_bytes()
}

fn stability_csv(series: &SeriesMap) -> Vec<u8> {
    let mut out = String::from("metric,year_from,year_to,rho,n\n");
    for (name, by_year) in ordered(series) {
        let years: Vec<&i32> = by_year.keys().collect();
        for w in years.windows(2) {
            let (rho, n) = rho_cells(&by_year[w[0]], &by_year[w[1]]);
            out.push_str(&format!("{name},{},{},{rho},{n}\n", w[0], w[1]));
        }
    }
    out.into_bytes()
}

fn box_stats_csv(series: &SeriesMap) -> Vec<u8> {
    let mut out = String::from("metric,year,n,median,q1,q3,iqr,lower_fence,upper_fence,outliers\n");
    for (name, by_year) in ordered(series) {
        for (year, scores) in by_year {
            let Ok(b) = box_stats(scores) else { continue };
            out.push_str(&format!(
                "{name},{year},{},{},{},{},{},{},{},{}\n",
                scores.len(),
                num(b.median),
                num(b.q1),
                num(b.q3),
                num(b.iqr),
                num(b.lower_fence),
                num(b.upper_fence),
                io::csv_field(&b.outliers.join(";")),
            ));
        }
    }
    out.into_bytes()
}

fn growth_periods(cfg: &PipelineConfig, gdp: &Series, years: &[i32]) -> Vec<(i32, i32)> {
    if !cfg.periods.is_empty() {
        return cfg.periods.clone();
    }
    let last = gdp.keys().map(|(_, y)| *y).max().unwrap_or(i32::MIN);
    let Some(&first) = years.first() else { return Vec::new() };
    let mut out = Vec::new();
    let mut t = first;
    while t + cfg.horizon <= last && years.contains(&t) {
        out.push((t, t + cfg.horizon));
        t += cfg.horizon;
    }
    out
}

fn read_series(p: &Path) -> Result<Series, CliError> {
    io::parse_series(io::open(p)?).map_err(|e| CliError::parse(p, e))
}

fn scores_at(series: Option<&BTreeMap<i32, ScoreVector>>, f: impl Fn(f64) -> Option<f64>) -> Series {
    let mut out = Series::new();
    for (year, s) in series.into_iter().flatten() {
        for (label, v) in s.iter() {
            if let Some(x) = f(v) {
                out.insert((label.to_string(), *year), x);
            }
        }
    }
    out
}

const NR_EXPORTS: &str = "nr_export_increase";

#[allow(clippy::too_many_arguments)]
fn growth_tables(
    cfg: &PipelineConfig,
    table: &TradeTable,
    kinds: &BTreeMap<String, ProductKind>,
    series: &SeriesMap,
    out: &mut Output,
    failures: &mut Vec<String>,
    notes: &mut Vec<String>,
) -> Result<(), CliError> {
    let gdp_path = cfg.gdp.as_ref().expect("checked by caller");
    let gdp = read_series(gdp_path)?;
    let years: Vec<i32> = series
        .get("diversity")
        .map(|s| s.keys().copied().collect())
        .unwrap_or_default();
    let periods = growth_periods(cfg, &gdp, &years);
    if periods.is_empty() {
        notes.push("no complete growth period in the data; regressions skipped".into());
        return Ok(());
    }

    let mut covariates: BTreeMap<String, Series> = BTreeMap::new();
    for (name, p) in &cfg.covariates {
        covariates.insert(name.clone(), read_series(p)?);
    }
    let mut nr = Series::new();
    let countries: BTreeSet<&String> = gdp.keys().map(|(c, _)| c).collect();
    for &(t0, t1) in &periods {
        for c in &countries {
            let Some(&g) = gdp.get(&((*c).clone(), t0)) else { continue };
            if let Ok(v) = nr_export_increase(table, kinds, g, c, t0, t1 - t0) {
                nr.insert(((*c).clone(), t0), v);
            }
        }
    }
    covariates.insert(NR_EXPORTS.into(), nr);
    let mut complexity: Vec<&str> = vec!["diversity"];
    covariates.insert("diversity".into(), scores_at(series.get("diversity"), Some));
    if series.contains_key("eci") {
        covariates.insert("eci".into(), scores_at(series.get("eci"), Some));
        complexity.push("eci");
    }
    if series.contains_key("fitness_mfcm") {
        let logs = scores_at(series.get("fitness_mfcm"), |c| (c > 0.0).then(|| c.ln()));
        covariates.insert("log_fitness".into(), logs);
        complexity.push("log_fitness");
    }

    let mut panel = align_panel(&gdp, &covariates, &periods)?;
    if let Some(p) = &cfg.exclusions {
        let ex = io::parse_exclusions(io::open(p)?).map_err(|e| CliError::parse(p, e))?;
        panel.apply_exclusions(&ex);
    }
    let obs = &panel.observations;
    let externals: Vec<&str> = cfg.covariates.keys().map(String::as_str).collect();
    let base: Vec<&str> = vec![LOG_INITIAL_GDP, NR_EXPORTS];
    let mut with_ext = base.clone();
    with_ext.extend(&externals);

    let exclusions: BTreeMap<String, usize> =
        panel.excluded.iter().map(|(r, n)| (r.to_string(), *n)).collect();

    let mut build = |title: &str, stem: &str, specs: Vec<(&str, Vec<&str>, Vec<&str>, GrowthVariant)>| -> Result<(), CliError> {
        let mut tbl = RegressionTable {
            title: title.to_string(),
            columns: Vec::new(),
        };
        for (label, cx, controls, variant) in specs {
            match growth_regression(obs, &cx, &controls, &variant) {
                Ok(mut col) => {
                    col.label = label.to_string();
                    tbl.columns.push(col);
                }
                Err(e) => failures.push(format!("{stem} column {label}: {e}")),
            }
        }
        write_table(out, stem, &tbl, obs, &exclusions)
    };

    let roman = ["I", "II", "III", "IV"];
    for (var, stem, title) in [
        ("eci", "growth_mr", "Growth regressions, method of reflections"),
        ("log_fitness", "growth_mfcm", "Growth regressions, modified fitness (logs)"),
    ] {
        if !complexity.contains(&var) {
            continue;
        }
        let specs = vec![
            (roman[0], vec![], base.clone(), GrowthVariant::Standard),
            (roman[1], vec![var], with_ext.clone(), GrowthVariant::Standard),
            (roman[2], vec!["diversity"], with_ext.clone(), GrowthVariant::Standard),
            (roman[3], vec![var, "diversity"], with_ext.clone(), GrowthVariant::Standard),
        ];
        build(title, stem, specs)?;
    }

    let mut robust = Vec::new();
    for var in complexity.iter().filter(|v| **v != "diversity") {
        robust.push((*var, vec![*var], with_ext.clone(), GrowthVariant::NoPeriodEffects));
    }
    if !robust.is_empty() {
        build("Growth regressions without period effects", "growth_robustness", robust)?;
    }

    if complexity.contains(&"eci") {
        let mut pc = Map::new();
        for var in complexity.iter().filter(|v| **v != "diversity") {
            let x: Vec<f64> = obs.iter().map(|o| o.covariates[*var]).collect();
            let y: Vec<f64> = obs.iter().map(|o| o.covariates["diversity"]).collect();
            let ctrl: Vec<Vec<f64>> = with_ext
                .iter()
                .map(|c| obs.iter().map(|o| o.covariates[*c]).collect())
                .collect();
            let refs: Vec<&[f64]> = ctrl.iter().map(Vec::as_slice).collect();
            let v = match partial_correlation(&x, &y, &refs) {
                Ok(r) => json!(r),
                Err(e) => json!(e.to_string()),
            };
            pc.insert(format!("{var}~diversity"), v);
        }
        out.put("partial_correlations.json", &pretty(&Value::Object(pc)))?;
    }
    Ok(())
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn write_table(
    out: &mut Output,
    stem: &str,
    tbl: &RegressionTable,
    obs: &[ecomplexity_core::data::PanelObservation],
    exclusions: &BTreeMap<String, usize>,
) -> Result<(), CliError> {
    out.put(&format!("{stem}.txt"), tbl.render_text().as_bytes())?;
    out.put(&format!("{stem}.csv"), &table_csv(&tbl.columns))?;
    let sd_y = sample_sd(&obs.iter().map(|o| o.growth).collect::<Vec<_>>());
    let mut standardized = Map::new();
    for col in &tbl.columns {
        let mut m = Map::new();
        for c in &col.result.coefficients {
            let Some(xs) = obs.iter().map(|o| o.covariates.get(&c.name).copied()).collect::<Option<Vec<f64>>>() else {
                continue;
            };
            if let Ok(b) = standardized_coefficient(&col.result, &c.name, sample_sd(&xs), sd_y) {
                m.insert(c.name.clone(), json!(b));
            }
        }
        standardized.insert(col.label.clone(), Value::Object(m));
    }
    let doc = json!({
        "title": tbl.title,
        "columns": tbl.columns,
        "standardized_coefficients": standardized,
        "excluded_observations": exclusions,
        "metadata": metadata(),
    });
    out.put(&format!("{stem}.json"), &pretty(&doc))
}

fn metadata() -> Value {
    json!({
        "cluster_correction": CLUSTER_CORRECTION,
        "p_values": "two-sided t, G-1 df when clustered, N-K otherwise",
        "r_squared": "overall R2 of the dummy regression",
        "information_criteria": "per observation: (-2 lnL + penalty) / N",
    })
}

fn table_csv(columns: &[TableColumn]) -> Vec<u8> {
    let mut out = String::from("column,variable,estimate,se,t_stat,p_value,stars\n");
    for col in columns {
        let l = io::csv_field(&col.label);
        for c in &col.result.coefficients {
            out.push_str(&format!(
                "{l},{},{},{},{},{},{}\n",
                io::csv_field(&c.name),
                num(c.estimate),
                num(c.se),
                num(c.t_stat),
                num(c.p_value),
                c.stars
            ));
        }
        let r = &col.result;
        for (name, v) in [
            ("n_obs", r.n_obs as f64),
            ("r_squared", r.r_squared),
            ("aic", r.info.aic),
            ("bic", r.info.bic),
            ("hq", r.info.hq),
        ] {
            out.push_str(&format!("{l},{name},{},,,,\n", num(v)));
        }
    }
    out.into_bytes()
}

fn service_table(
    outputs: &[YearOutput],
    series: &SeriesMap,
    out: &mut Output,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let mut tbl = RegressionTable {
        title: "Product complexity on a service dummy".into(),
        columns: Vec::new(),
    };
    for (label, name) in [("pci", "pci"), ("mfcm", "complexity_mfcm")] {
        let Some(by_year) = series.get(name) else { continue };
        let mut rows = Vec::new();
        for y in outputs {
            let Some(s) = by_year.get(&y.year) else { continue };
            for (product, v) in s.iter() {
                rows.push(PciObservation {
                    year: y.year,
                    product: product.to_string(),
                    pci: v,
                    kind: y.kinds.get(product).copied().unwrap_or_default(),
                });
            }
        }
        match pci_service_regression(&rows) {
            Ok(result) => tbl.columns.push(TableColumn {
                label: label.into(),
                period_effects: true,
                result,
            }),
            Err(e) => failures.push(format!("service dummy {label}: {e}")),
        }
    }
    if tbl.columns.is_empty() {
        return Ok(());
    }
    out.put("service_dummy.txt", tbl.render_text().as_bytes())?;
    out.put("service_dummy.csv", &table_csv(&tbl.columns))?;
    let doc = json!({ "title": tbl.title, "columns": tbl.columns, "metadata": metadata() });
    out.put("service_dummy.json", &pretty(&doc))
}

pub fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("json values serialize");
    s.push(b'\n');
    s
}

/// Single writer for the output directory.
struct Output {
    dir: PathBuf,
    entries: Vec<(String, String)>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.put_unlisted(name, bytes)?;
        self.entries.push((name.to_string(), sha256(bytes)));
        Ok(())
    }

    fn put_unlisted(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    }
}
