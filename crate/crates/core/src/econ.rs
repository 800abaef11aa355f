//! Pooled OLS with period dummies and cluster-robust standard errors, plus
//! the growth-regression and service-dummy drivers built on it.
//!
//! Clustered covariance is the sandwich
//!
//! ```text
//! V = c · (XᵀX)⁻¹ [Σ_g (X_gᵀu_g)(X_gᵀu_g)ᵀ] (XᵀX)⁻¹,   c = G/(G−1) · (N−1)/(N−K)
//! ```
//!
//! with p-values from a t distribution on `G − 1` degrees of freedom.
//! Information criteria use the Gaussian log-likelihood and are reported
//! per observation (`AIC = (−2ℓ + 2K)/N` and likewise for BIC and HQ).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::data::{PanelObservation, ProductKind};
use crate::linalg::{Matrix, Qr};
use crate::special::{normal_two_sided, student_t_two_sided};
use crate::stats::pearson;
use crate::{Error, Result};

pub const SIGNIFICANCE_LEVELS: [f64; 3] = [0.01, 0.05, 0.1];
pub const INTERCEPT: &str = "const";
pub const SERVICE_DUMMY: &str = "service_dummy";
pub const CLUSTER_CORRECTION: &str = "G/(G-1)*(N-1)/(N-K)";

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PValueMode {
    /// t distribution: `G − 1` df when clustered, `N − K` otherwise.
    #[default]
    StudentT,
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub include_period_fe: bool,
    /// Label of the cluster identifier; `None` gives ordinary errors.
    pub cluster_by: Option<String>,
    pub p_values: PValueMode,
}

impl RegressionSpec {
    /// Period effects on, clustered by country.
    pub fn new(dependent: impl Into<String>, regressors: &[&str]) -> Self {
        RegressionSpec {
            dependent: dependent.into(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            include_period_fe: true,
            cluster_by: Some("country".into()),
            p_values: PValueMode::StudentT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regressors.is_empty() {
            return Err(Error::InvalidParameter("at least one regressor is required".into()));
        }
        let distinct: BTreeSet<&String> = self.regressors.iter().collect();
        if distinct.len() != self.regressors.len() {
            return Err(Error::InvalidParameter("regressors must be distinct".into()));
        }
        if distinct.contains(&self.dependent) {
            return Err(Error::InvalidParameter(format!(
                "dependent variable `{}` is also a regressor",
                self.dependent
            )));
        }
        if self.regressors.iter().any(|r| r == INTERCEPT) {
            return Err(Error::InvalidParameter(format!("`{INTERCEPT}` is reserved for the intercept")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfoCriteria {
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub hq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum StdErrors {
    Ordinary,
    Clustered { clusters: usize, factor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionResult {
    /// Intercept first, then regressors, then period dummies.
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub rss: f64,
    /// Period effect relative to the first (baseline) period, which is 0.
    /// Empty without period effects.
    pub fe_estimates: BTreeMap<i32, f64>,
    pub info: InfoCriteria,
    pub std_errors: StdErrors,
    /// Degrees of freedom of the reference t distribution.
    pub df: f64,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.coefficient(name).map(|c| c.estimate)
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.coefficient(name).map(|c| c.se)
    }
}

pub fn stars(p: f64) -> &'static str {
    if p < SIGNIFICANCE_LEVELS[0] {
        "***"
    } else if p < SIGNIFICANCE_LEVELS[1] {
        "**"
    } else if p < SIGNIFICANCE_LEVELS[2] {
        "*"
    } else {
        ""
    }
}

/// A design matrix ready for estimation. The intercept and any dummies
/// must already be columns of `x`.
#[derive(Debug, Clone)]
pub struct Design {
    pub names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub clusters: Option<Vec<String>>,
    /// `(period, column)` for every period; `None` marks the baseline.
    pub period_columns: Vec<(i32, Option<usize>)>,
    pub p_values: PValueMode,
}

/// OLS on an explicit design.
pub fn fit(design: &Design) -> Result<RegressionResult> {
    let (n, k) = (design.x.nrows(), design.x.ncols());
    if n < k + 1 {
        return Err(Error::TooFewObservations { n_obs: n, n_params: k });
    }
    let qr = Qr::new(&design.x);
    let dependent = qr.dependent_columns(RANK_TOL);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient(
            dependent.into_iter().map(|j| design.names[j].clone()).collect(),
        ));
    }
    let beta = qr.solve(&design.y);
    let fitted = design.x.matvec(&beta);
    let resid: Vec<f64> = design.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = resid.iter().map(|u| u * u).sum();
    let ybar = design.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = design.y.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 1.0 };

    let bread = qr.gram_inverse();
    let (cov, std_errors, df) = match &design.clusters {
        None => {
            let s2 = rss / (n - k) as f64;
            let v = Matrix::from_vec(k, k, bread.as_slice().iter().map(|b| b * s2).collect());
            (v, StdErrors::Ordinary, (n - k) as f64)
        }
        Some(ids) => {
            let (meat, g) = cluster_meat(&design.x, &resid, ids);
            if g < 2 {
                return Err(Error::TooFewClusters(g));
            }
            let factor = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
            let v = bread.matmul(&meat).matmul(&bread);
            let v = Matrix::from_vec(k, k, v.as_slice().iter().map(|x| x * factor).collect());
            (v, StdErrors::Clustered { clusters: g, factor }, (g - 1) as f64)
        }
    };

    let coefficients = (0..k)
        .map(|j| {
            let se = libm::sqrt(cov[(j, j)].max(0.0));
            let (t_stat, p_value) = if se == 0.0 && beta[j] == 0.0 {
                (0.0, 1.0)
            } else {
                let t = beta[j] / se;
                let p = match design.p_values {
                    PValueMode::StudentT => student_t_two_sided(t, df),
                    PValueMode::Normal => normal_two_sided(t),
                };
                (t, p)
            };
            Coefficient {
                name: design.names[j].clone(),
                estimate: beta[j],
                se,
                t_stat,
                p_value,
                stars: stars(p_value).to_string(),
            }
        })
        .collect();

    let fe_estimates = design
        .period_columns
        .iter()
        .map(|&(t, col)| (t, col.map_or(0.0, |j| beta[j])))
        .collect();

    Ok(RegressionResult {
        coefficients,
        r_squared,
        n_obs: n,
        n_params: k,
        rss,
        fe_estimates,
        info: info_criteria(rss, n, k),
        std_errors,
        df,
    })
}

fn cluster_meat(x: &Matrix, resid: &[f64], ids: &[String]) -> (Matrix, usize) {
    let k = x.ncols();
    let mut scores: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let s = scores.entry(id.as_str()).or_insert_with(|| vec![0.0; k]);
        for (sj, xij) in s.iter_mut().zip(x.row(i)) {
            *sj += xij * resid[i];
        }
    }
    let mut meat = Matrix::zeros(k, k);
    for s in scores.values() {
        for a in 0..k {
            for b in 0..k {
                meat[(a, b)] += s[a] * s[b];
            }
        }
    }
    (meat, scores.len())
}

pub fn info_criteria(rss: f64, n: usize, k: usize) -> InfoCriteria {
    let nf = n as f64;
    let kf = k as f64;
    let ll = -0.5 * nf * (1.0 + libm::log(2.0 * core::f64::consts::PI) + libm::log(rss / nf));
    InfoCriteria {
        log_likelihood: ll,
        aic: (-2.0 * ll + 2.0 * kf) / nf,
        bic: (-2.0 * ll + kf * libm::log(nf)) / nf,
        hq: (-2.0 * ll + 2.0 * kf * libm::log(libm::log(nf))) / nf,
    }
}

/// `y = α + Σ β_k x_k + η_t + ε` on panel observations. The first period is
/// the baseline for the period dummies.
pub fn ols_fe(panel: &[PanelObservation], spec: &RegressionSpec) -> Result<RegressionResult> {
    spec.validate()?;
    let n = panel.len();
    let mut names = vec![INTERCEPT.to_string()];
    names.extend(spec.regressors.iter().cloned());
    let periods: Vec<i32> = if spec.include_period_fe {
        panel
            .iter()
            .map(|o| o.period_start)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        Vec::new()
    };
    let mut period_columns = Vec::new();
    for (idx, &t) in periods.iter().enumerate() {
        if idx == 0 {
            period_columns.push((t, None));
        } else {
            period_columns.push((t, Some(names.len())));
            names.push(format!("period_{t}"));
        }
    }
    let k = names.len();
    let mut x = Matrix::zeros(n, k);
    let mut y = Vec::with_capacity(n);
    for (i, obs) in panel.iter().enumerate() {
        y.push(lookup(obs, &spec.dependent)?);
        x[(i, 0)] = 1.0;
        for (j, r) in spec.regressors.iter().enumerate() {
            x[(i, j + 1)] = lookup(obs, r)?;
        }
        for &(t, col) in &period_columns {
            if let Some(j) = col {
                if obs.period_start == t {
                    x[(i, j)] = 1.0;
                }
            }
        }
    }
    let clusters = spec
        .cluster_by
        .as_ref()
        .map(|_| panel.iter().map(|o| o.cluster_id.clone()).collect());
    fit(&Design {
        names,
        x,
        y,
        clusters,
        period_columns,
        p_values: spec.p_values,
    })
}

fn lookup(obs: &PanelObservation, name: &str) -> Result<f64> {
    obs.value(name).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "observation {}/{} has no value for `{name}`",
            obs.country, obs.period_start
        ))
    })
}

/// `β̂_x · sd_x / sd_y`.
pub fn standardized_coefficient(result: &RegressionResult, x: &str, sd_x: f64, sd_y: f64) -> Result<f64> {
    if !(sd_y > 0.0) {
        return Err(Error::InvalidParameter(format!("sd_y must be positive, got {sd_y}")));
    }
    let beta = result
        .estimate(x)
        .ok_or_else(|| Error::UnknownRegressor(x.to_string()))?;
    Ok(beta * sd_x / sd_y)
}

/// Robustness variants of a growth-regression column.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GrowthVariant {
    /// Period effects, errors clustered by country.
    #[default]
    Standard,
    /// No period effects; ordinary standard errors.
    NoPeriodEffects,
    /// Standard, plus one extra control.
    ExtraControl(String),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableColumn {
    pub label: String,
    pub period_effects: bool,
    pub result: RegressionResult,
}

/// Regresses period growth on complexity variables and controls (in that
/// order). With no complexity variables the column holds the controls only.
pub fn growth_regression(
    panel: &[PanelObservation],
    complexity_vars: &[&str],
    controls: &[&str],
    variant: &GrowthVariant,
) -> Result<TableColumn> {
    let mut regressors: Vec<&str> = complexity_vars.to_vec();
    regressors.extend_from_slice(controls);
    if let GrowthVariant::ExtraControl(extra) = variant {
        regressors.push(extra);
    }
    let mut spec = RegressionSpec::new("growth", &regressors);
    if *variant == GrowthVariant::NoPeriodEffects {
        spec.include_period_fe = false;
        spec.cluster_by = None;
    }
    let result = ols_fe(panel, &spec)?;
    let label = if complexity_vars.is_empty() {
        "controls".to_string()
    } else {
        complexity_vars.join("+")
    };
    Ok(TableColumn {
        label,
        period_effects: spec.include_period_fe,
        result,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PciObservation {
    pub year: i32,
    pub product: String,
    pub pci: f64,
    pub kind: ProductKind,
}

/// `p_jt = μ_g + Δμ_s D_s + η_t + ε_jt`, clustered by product. The
/// intercept is the baseline-year goods mean and the `service_dummy`
/// coefficient the service premium.
pub fn pci_service_regression(rows: &[PciObservation]) -> Result<RegressionResult> {
    let mut kinds_by_year: BTreeMap<i32, BTreeSet<ProductKind>> = BTreeMap::new();
    for r in rows {
        kinds_by_year.entry(r.year).or_default().insert(r.kind);
    }
    if kinds_by_year.is_empty() {
        return Err(Error::MissingKind("good"));
    }
    for kinds in kinds_by_year.values() {
        if !kinds.contains(&ProductKind::Good) {
            return Err(Error::MissingKind("good"));
        }
        if !kinds.contains(&ProductKind::Service) {
            return Err(Error::MissingKind("service"));
        }
    }
    let years: Vec<i32> = kinds_by_year.keys().copied().collect();
    let mut names = vec![INTERCEPT.to_string(), SERVICE_DUMMY.to_string()];
    let mut period_columns = vec![(years[0], None)];
    for &t in &years[1..] {
        period_columns.push((t, Some(names.len())));
        names.push(format!("period_{t}"));
    }
    let mut x = Matrix::zeros(rows.len(), names.len());
    for (i, r) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = if r.kind == ProductKind::Service { 1.0 } else { 0.0 };
        if let Some(&(_, Some(j))) = period_columns.iter().find(|(t, _)| *t == r.year) {
            x[(i, j)] = 1.0;
        }
    }
    fit(&Design {
        names,
        x,
        y: rows.iter().map(|r| r.pci).collect(),
        clusters: Some(rows.iter().map(|r| r.product.clone()).collect()),
        period_columns,
        p_values: PValueMode::StudentT,
    })
}

/// Correlation of `x` and `y` after partialling out an intercept and the
/// given controls.
pub fn partial_correlation(x: &[f64], y: &[f64], controls: &[&[f64]]) -> Result<f64> {
    let n = x.len();
    if y.len() != n || controls.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidParameter("all series must have the same length".into()));
    }
    let k = controls.len() + 1;
    if n < k + 2 {
        return Err(Error::TooFewObservations { n_obs: n, n_params: k });
    }
    let mut z = Matrix::zeros(n, k);
    for i in 0..n {
        z[(i, 0)] = 1.0;
        for (j, c) in controls.iter().enumerate() {
            z[(i, j + 1)] = c[i];
        }
    }
    let qr = Qr::new(&z);
    let dependent = qr.dependent_columns(RANK_TOL);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient(dependent.into_iter().map(|j| format!("control_{j}")).collect()));
    }
    let residualize = |v: &[f64]| -> Vec<f64> {
        let b = qr.solve(v);
        let f = z.matvec(&b);
        v.iter().zip(f).map(|(a, b)| a - b).collect()
    };
    pearson(&residualize(x), &residualize(y))
        .ok_or_else(|| Error::InvalidParameter("a residual series is constant".into()))
}

/// Side-by-side regression columns.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionTable {
    pub title: String,
    pub columns: Vec<TableColumn>,
}

impl RegressionTable {
    /// Regressors in first-seen order across columns, intercept last,
    /// period dummies omitted.
    pub fn row_names(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for col in &self.columns {
            for c in &col.result.coefficients {
                if c.name != INTERCEPT && !c.name.starts_with("period_") && !seen.contains(&c.name) {
                    seen.push(c.name.clone());
                }
            }
        }
        seen.push(INTERCEPT.to_string());
        seen
    }

    /// Plain-text layout: estimate with stars, standard error in
    /// parentheses beneath, then observations, R² and the period-effect flag.
    pub fn render_text(&self) -> String {
        const NAME_W: usize = 28;
        const COL_W: usize = 14;
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "{}", self.title);
        }
        let _ = write!(out, "{:<NAME_W$}", "Variable");
        for col in &self.columns {
            let _ = write!(out, "{:>COL_W$}", col.label);
        }
        out.push('\n');
        for name in self.row_names() {
            let _ = write!(out, "{:<NAME_W$}", name);
            for col in &self.columns {
                let cell = col
                    .result
                    .coefficient(&name)
                    .map(|c| format!("{:.3}{}", c.estimate, c.stars))
                    .unwrap_or_default();
                let _ = write!(out, "{:>COL_W$}", cell);
            }
            out.push('\n');
            let _ = write!(out, "{:<NAME_W$}", "");
            for col in &self.columns {
                let cell = col
                    .result
                    .coefficient(&name)
                    .map(|c| format!("({:.3})", c.se))
                    .unwrap_or_default();
                let _ = write!(out, "{:>COL_W$}", cell);
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<NAME_W$}", "Observations");
        for col in &self.columns {
            let _ = write!(out, "{:>COL_W$}", col.result.n_obs);
        }
        out.push('\n');
        let _ = write!(out, "{:<NAME_W$}", "R2");
        for col in &self.columns {
            let _ = write!(out, "{:>COL_W$.3}", col.result.r_squared);
        }
        out.push('\n');
        let _ = write!(out, "{:<NAME_W$}", "Period FE");
        for col in &self.columns {
            let _ = write!(out, "{:>COL_W$}", if col.period_effects { "Yes" } else { "No" });
        }
        out.push('\n');
        let _ = writeln!(out, "*** p<0.01, ** p<0.05, * p<0.1");
        out
    }
}
