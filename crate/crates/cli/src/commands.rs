//! `compare` and `regress`: small commands that work on files the pipeline
//! (or the user) already produced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ecomplexity_core::data::align_panel;
use ecomplexity_core::econ::{ols_fe, PValueMode, RegressionSpec, RegressionTable, TableColumn};
use ecomplexity_core::stats::{yearly_rank_correlation, Direction};
use ecomplexity_core::{Entity, Metric, ScoreVector};

use crate::error::CliError;
use crate::fmt::num;
use crate::io;

/// Years for which `dir` holds `{metric}_{year}.csv`.
fn score_files(dir: &Path, metric: &str) -> Result<BTreeMap<i32, ScoreVector>, CliError> {
    let prefix = format!("{metric}_");
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(year) = name
            .strip_prefix(&prefix)
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|y| y.parse::<i32>().ok())
        else {
            continue;
        };
        let rows = io::parse_scores(io::open(&path)?).map_err(|e| CliError::parse(&path, e))?;
        let (labels, values) = rows.into_iter().unzip();
        out.insert(year, ScoreVector::new(Entity::Country, Metric::Eci, labels, values));
    }
    if out.is_empty() {
        return Err(CliError::input(dir, format!("no {metric}_<year>.csv files")));
    }
    Ok(out)
}

/// Yearly Spearman correlation between two score series, as
/// `year,rho,n` CSV.
pub fn compare(left: &Path, left_metric: &str, right: &Path, right_metric: &str) -> Result<String, CliError> {
    let a = score_files(left, left_metric)?;
    let b = score_files(right, right_metric)?;
    let rows = yearly_rank_correlation(&a, &b, Direction::Descending)?;
    let mut out = String::from("year,rho,n\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.year, num(r.rho), r.n));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RegressArgs {
    pub gdp: PathBuf,
    pub covariates: BTreeMap<String, PathBuf>,
    pub periods: Vec<(i32, i32)>,
    pub regressors: Vec<String>,
    pub exclusions: Option<PathBuf>,
    pub period_fe: bool,
    pub cluster: bool,
    pub normal_p_values: bool,
}

pub struct RegressOutput {
    pub text: String,
    pub json: serde_json::Value,
}

pub fn regress(args: &RegressArgs) -> Result<RegressOutput, CliError> {
    let gdp = io::parse_series(io::open(&args.gdp)?).map_err(|e| CliError::parse(&args.gdp, e))?;
    let mut covariates = BTreeMap::new();
    for (name, path) in &args.covariates {
        let s = io::parse_series(io::open(path)?).map_err(|e| CliError::parse(path, e))?;
        covariates.insert(name.clone(), s);
    }
    let mut panel = align_panel(&gdp, &covariates, &args.periods)?;
    if let Some(path) = &args.exclusions {
        let ex = io::parse_exclusions(io::open(path)?).map_err(|e| CliError::parse(path, e))?;
        panel.apply_exclusions(&ex);
    }
    let regs: Vec<&str> = args.regressors.iter().map(String::as_str).collect();
    let mut spec = RegressionSpec::new("growth", &regs);
    spec.include_period_fe = args.period_fe;
    if !args.cluster {
        spec.cluster_by = None;
    }
    if args.normal_p_values {
        spec.p_values = PValueMode::Normal;
    }
    let result = ols_fe(&panel.observations, &spec)?;
    let table = RegressionTable {
        title: "Dependent variable: growth".into(),
        columns: vec![TableColumn {
            label: "(1)".into(),
            period_effects: spec.include_period_fe,
            result,
        }],
    };
    let excluded: BTreeMap<String, usize> = panel.excluded.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let json = serde_json::json!({
        "spec": {
            "regressors": args.regressors,
            "period_fe": spec.include_period_fe,
            "cluster_by": spec.cluster_by,
            "p_values": spec.p_values,
            "periods": args.periods,
        },
        "result": table.columns[0].result,
        "excluded": excluded,
    });
    Ok(RegressOutput {
        text: table.render_text(),
        json,
    })
}
