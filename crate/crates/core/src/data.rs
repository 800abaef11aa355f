//! Trade records, per-year export matrices and panel alignment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::RangeInclusive;

use crate::linalg::Matrix;
use crate::{Axis, Error, Result};

pub const YEAR_RANGE: RangeInclusive<i32> = 1900..=2100;

/// Covariate name under which [`align_panel`] stores `ln GDP_t`.
pub const LOG_INITIAL_GDP: &str = "log_initial_gdp";

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeRecord {
    pub year: i32,
    pub country: String,
    pub product: String,
    pub value: f64,
}

impl TradeRecord {
    pub fn new(
        year: i32,
        country: impl Into<String>,
        product: impl Into<String>,
        value: f64,
    ) -> Result<Self> {
        let rec = TradeRecord {
            year,
            country: country.into(),
            product: product.into(),
            value,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !YEAR_RANGE.contains(&self.year) {
            return Err(Error::InvalidRecord(format!("year {} out of range", self.year)));
        }
        if self.country.is_empty() || self.product.is_empty() {
            return Err(Error::InvalidRecord("empty country or product code".into()));
        }
        if !(self.value >= 0.0) || !self.value.is_finite() {
            return Err(Error::InvalidRecord(format!("value {} is not a finite nonnegative number", self.value)));
        }
        Ok(())
    }
}

/// Aggregated export records, sorted by (year, country, product) with one
/// record per key.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeTable {
    records: Vec<TradeRecord>,
    pub source: String,
}

impl TradeTable {
    /// Sums records sharing a (year, country, product) key. Returns the
    /// table and the number of rows that were folded into an earlier one.
    pub fn aggregate(
        records: impl IntoIterator<Item = TradeRecord>,
        source: impl Into<String>,
    ) -> (TradeTable, usize) {
        let mut acc: BTreeMap<(i32, String, String), f64> = BTreeMap::new();
        let mut duplicates = 0;
        for r in records {
            match acc.entry((r.year, r.country, r.product)) {
                alloc::collections::btree_map::Entry::Occupied(mut e) => {
                    *e.get_mut() += r.value;
                    duplicates += 1;
                }
                alloc::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(r.value);
                }
            }
        }
        let records = acc
            .into_iter()
            .map(|((year, country, product), value)| TradeRecord {
                year,
                country,
                product,
                value,
            })
            .collect();
        (
            TradeTable {
                records,
                source: source.into(),
            },
            duplicates,
        )
    }

    pub fn records(&self) -> &[TradeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut ys: Vec<i32> = self.records.iter().map(|r| r.year).collect();
        ys.dedup();
        ys
    }

    pub fn year_records(&self, year: i32) -> &[TradeRecord] {
        let lo = self.records.partition_point(|r| r.year < year);
        let hi = self.records.partition_point(|r| r.year <= year);
        &self.records[lo..hi]
    }

    /// Keeps only the listed countries; returns the number of dropped records.
    pub fn retain_countries(&mut self, allowed: &BTreeSet<String>) -> usize {
        let before = self.records.len();
        self.records.retain(|r| allowed.contains(&r.country));
        before - self.records.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProductKind {
    #[default]
    Good,
    Service,
}

impl ProductKind {
    pub fn parse(s: &str) -> Option<ProductKind> {
        match s.trim() {
            "good" => Some(ProductKind::Good),
            "service" => Some(ProductKind::Service),
            _ => None,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ProductKind::Good => "good",
            ProductKind::Service => "service",
        }
    }
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Labels removed while pruning empty rows and columns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pruned {
    pub countries: Vec<String>,
    pub products: Vec<String>,
}

impl Pruned {
    pub fn is_empty(&self) -> bool {
        self.countries.is_empty() && self.products.is_empty()
    }
}

/// Dense country × product export values for one year.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportMatrix {
    pub year: i32,
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: Matrix,
    pub kinds: Vec<ProductKind>,
}

impl ExportMatrix {
    /// Checks shapes, label uniqueness and that values are finite and
    /// nonnegative. Marginals are not checked here.
    pub fn new(
        year: i32,
        countries: Vec<String>,
        products: Vec<String>,
        values: Matrix,
        kinds: Vec<ProductKind>,
    ) -> Result<Self> {
        if values.nrows() != countries.len() || values.ncols() != products.len() {
            return Err(Error::InvalidParameter(format!(
                "export matrix is {}x{} but has {} country and {} product labels",
                values.nrows(),
                values.ncols(),
                countries.len(),
                products.len()
            )));
        }
        if kinds.len() != products.len() {
            return Err(Error::InvalidParameter("one product kind per column required".into()));
        }
        check_unique(&countries, Axis::Country)?;
        check_unique(&products, Axis::Product)?;
        if let Some(v) = values.as_slice().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("export value {v} is negative or not finite")));
        }
        Ok(ExportMatrix {
            year,
            countries,
            products,
            values,
            kinds,
        })
    }

    /// Unlabeled matrix (countries `c0..`, products `p0..`, all goods).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let values = Matrix::from_rows(rows);
        let countries = (0..values.nrows()).map(|i| format!("c{i}")).collect();
        let products: Vec<String> = (0..values.ncols()).map(|j| format!("p{j}")).collect();
        let kinds = alloc::vec![ProductKind::Good; products.len()];
        ExportMatrix::new(0, countries, products, values, kinds)
    }

    /// Tags products from a sidecar map; unlisted products stay goods.
    pub fn with_kinds(mut self, kinds: &BTreeMap<String, ProductKind>) -> Self {
        for (p, k) in self.products.iter().zip(self.kinds.iter_mut()) {
            *k = kinds.get(p).copied().unwrap_or_default();
        }
        self
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }
}

fn check_unique(labels: &[String], axis: Axis) -> Result<()> {
    let set: BTreeSet<&String> = labels.iter().collect();
    if set.len() != labels.len() {
        return Err(Error::InvalidParameter(format!("duplicate {axis} labels")));
    }
    Ok(())
}

/// Dense matrix of one year's exports with sorted country and product
/// orders. Countries and products whose totals are zero are dropped and
/// reported.
pub fn build_export_matrix(table: &TradeTable, year: i32) -> Result<(ExportMatrix, Pruned)> {
    let recs = table.year_records(year);
    if recs.is_empty() {
        return Err(Error::NoDataForYear(year));
    }
    let countries: BTreeSet<&str> = recs.iter().map(|r| r.country.as_str()).collect();
    let products: BTreeSet<&str> = recs.iter().map(|r| r.product.as_str()).collect();
    let c_idx: BTreeMap<&str, usize> = countries.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let p_idx: BTreeMap<&str, usize> = products.iter().enumerate().map(|(j, p)| (*p, j)).collect();

    let mut values = Matrix::zeros(countries.len(), products.len());
    for r in recs {
        values[(c_idx[r.country.as_str()], p_idx[r.product.as_str()])] += r.value;
    }
    let row_tot = values.row_sums();
    let col_tot = values.col_sums();
    let keep_rows: Vec<usize> = (0..row_tot.len()).filter(|&i| row_tot[i] > 0.0).collect();
    let keep_cols: Vec<usize> = (0..col_tot.len()).filter(|&j| col_tot[j] > 0.0).collect();
    let countries: Vec<&str> = countries.into_iter().collect();
    let products: Vec<&str> = products.into_iter().collect();
    let pruned = Pruned {
        countries: (0..countries.len())
            .filter(|i| row_tot[*i] <= 0.0)
            .map(|i| countries[i].to_string())
            .collect(),
        products: (0..products.len())
            .filter(|j| col_tot[*j] <= 0.0)
            .map(|j| products[j].to_string())
            .collect(),
    };
    if keep_rows.is_empty() || keep_cols.is_empty() {
        return Err(Error::NoDataForYear(year));
    }
    let matrix = ExportMatrix {
        year,
        countries: keep_rows.iter().map(|&i| countries[i].to_string()).collect(),
        products: keep_cols.iter().map(|&j| products[j].to_string()).collect(),
        values: values.select(&keep_rows, &keep_cols),
        kinds: alloc::vec![ProductKind::Good; keep_cols.len()],
    };
    Ok((matrix, pruned))
}

/// Natural-resource product codes: SITC sections 0 to 4 plus division 68.
pub fn is_natural_resource(code: &str) -> bool {
    let mut chars = code.chars();
    match chars.next() {
        Some('0'..='4') => true,
        Some('6') => chars.next() == Some('8'),
        _ => false,
    }
}

/// `(NR_{t+h} − NR_t) / gdp_initial`, where NR sums the country's exports of
/// natural-resource goods. Products tagged as services in `kinds` never
/// count. Values are used as supplied.
pub fn nr_export_increase(
    table: &TradeTable,
    kinds: &BTreeMap<String, ProductKind>,
    gdp_initial: f64,
    country: &str,
    t: i32,
    horizon: i32,
) -> Result<f64> {
    if !(gdp_initial > 0.0) {
        return Err(Error::InvalidParameter(format!("initial GDP must be positive, got {gdp_initial}")));
    }
    let nr_at = |year: i32| -> Result<f64> {
        let recs: Vec<&TradeRecord> = table
            .year_records(year)
            .iter()
            .filter(|r| r.country == country)
            .collect();
        if recs.is_empty() {
            return Err(Error::MissingPeriod {
                country: country.to_string(),
                year,
            });
        }
        Ok(recs
            .iter()
            .filter(|r| kinds.get(&r.product) != Some(&ProductKind::Service))
            .filter(|r| is_natural_resource(&r.product))
            .map(|r| r.value)
            .sum())
    };
    let start = nr_at(t)?;
    let end = nr_at(t + horizon)?;
    Ok((end - start) / gdp_initial)
}

/// `(country, year) → value` series, as read from a `country,year,value` file.
pub type Series = BTreeMap<(String, i32), f64>;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PanelObservation {
    pub country: String,
    pub period_start: i32,
    pub period_end: i32,
    /// `ln(GDP_end / GDP_start)`.
    pub growth: f64,
    pub covariates: BTreeMap<String, f64>,
    pub cluster_id: String,
}

impl PanelObservation {
    pub fn value(&self, name: &str) -> Option<f64> {
        if name == "growth" {
            Some(self.growth)
        } else {
            self.covariates.get(name).copied()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExclusionReason {
    MissingEndpoint,
    NonPositiveGdp,
    MissingCovariate,
    UserExcluded,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::MissingEndpoint => "missing endpoint",
            ExclusionReason::NonPositiveGdp => "nonpositive gdp",
            ExclusionReason::MissingCovariate => "missing covariate",
            ExclusionReason::UserExcluded => "user excluded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub observations: Vec<PanelObservation>,
    pub excluded: BTreeMap<ExclusionReason, usize>,
}

/// Builds one observation per (country, period) for every country in the GDP
/// series. Covariates are read at the period start; `ln GDP_t` is added under
/// [`LOG_INITIAL_GDP`]. Observations are ordered by period, then country.
pub fn align_panel(
    gdp: &Series,
    covariates: &BTreeMap<String, Series>,
    periods: &[(i32, i32)],
) -> Result<Panel> {
    if periods.is_empty() {
        return Err(Error::InvalidParameter("at least one period is required".into()));
    }
    let countries: BTreeSet<&String> = gdp.keys().map(|(c, _)| c).collect();
    let mut panel = Panel::default();
    for &(t0, t1) in periods {
        for &country in &countries {
            let start = gdp.get(&(country.clone(), t0));
            let end = gdp.get(&(country.clone(), t1));
            let (start, end) = match (start, end) {
                (Some(&a), Some(&b)) => (a, b),
                _ => {
                    *panel.excluded.entry(ExclusionReason::MissingEndpoint).or_default() += 1;
                    continue;
                }
            };
            if !(start > 0.0 && end > 0.0) {
                *panel.excluded.entry(ExclusionReason::NonPositiveGdp).or_default() += 1;
                continue;
            }
            let mut cov = BTreeMap::new();
            let mut missing = false;
            for (name, series) in covariates {
                match series.get(&(country.clone(), t0)) {
                    Some(&v) if v.is_finite() => {
                        cov.insert(name.clone(), v);
                    }
                    _ => {
                        missing = true;
                        break;
                    }
                }
            }
            if missing {
                *panel.excluded.entry(ExclusionReason::MissingCovariate).or_default() += 1;
                continue;
            }
            cov.insert(LOG_INITIAL_GDP.to_string(), libm::log(start));
            panel.observations.push(PanelObservation {
                country: country.clone(),
                period_start: t0,
                period_end: t1,
                growth: libm::log(end / start),
                covariates: cov,
                cluster_id: country.clone(),
            });
        }
    }
    Ok(panel)
}

/// A user-listed outlier: a country in one period, or in every period.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exclusion {
    pub country: String,
    pub period_start: Option<i32>,
}

impl Panel {
    /// Drops observations matching any exclusion; returns how many went.
    pub fn apply_exclusions(&mut self, exclusions: &[Exclusion]) -> usize {
        let before = self.observations.len();
        self.observations.retain(|o| {
            !exclusions.iter().any(|e| {
                e.country == o.country && e.period_start.is_none_or(|t| t == o.period_start)
            })
        });
        let dropped = before - self.observations.len();
        if dropped > 0 {
            *self.excluded.entry(ExclusionReason::UserExcluded).or_default() += dropped;
        }
        dropped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(y: i32, c: &str, p: &str, v: f64) -> TradeRecord {
        TradeRecord::new(y, c, p, v).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let (t, dup) = TradeTable::aggregate(
            vec![rec(2005, "USA", "266", 1.0), rec(2005, "USA", "266", 2.0)],
            "test",
        );
        assert_eq!(dup, 1);
        assert_eq!(t.records(), &[rec(2005, "USA", "266", 3.0)]);
    }

    #[test]
    fn record_invariants() {
        assert!(TradeRecord::new(2005, "USA", "266", -1.0).is_err());
        assert!(TradeRecord::new(1800, "USA", "266", 1.0).is_err());
        assert!(TradeRecord::new(2005, "", "266", 1.0).is_err());
        assert!(TradeRecord::new(2005, "USA", "266", f64::NAN).is_err());
    }

    #[test]
    fn build_places_values_densely() {
        let (t, _) = TradeTable::aggregate(
            vec![rec(2000, "A", "p", 4.0), rec(2000, "B", "p", 2.0), rec(2000, "B", "q", 2.0)],
            "",
        );
        let (m, pruned) = build_export_matrix(&t, 2000).unwrap();
        assert!(pruned.is_empty());
        assert_eq!(m.countries, vec!["A", "B"]);
        assert_eq!(m.products, vec!["p", "q"]);
        assert_eq!(m.values, Matrix::from_rows(&[[4.0, 0.0], [2.0, 2.0]]));
    }

    #[test]
    fn zero_columns_are_pruned() {
        let (t, _) = TradeTable::aggregate(vec![rec(2000, "A", "p", 4.0), rec(2000, "A", "q", 0.0)], "");
        let (m, pruned) = build_export_matrix(&t, 2000).unwrap();
        assert_eq!(m.products, vec!["p"]);
        assert_eq!(pruned.products, vec!["q"]);
    }

    #[test]
    fn empty_year_is_an_error() {
        let (t, _) = TradeTable::aggregate(vec![rec(2000, "A", "p", 4.0)], "");
        assert_eq!(build_export_matrix(&t, 2001).unwrap_err(), Error::NoDataForYear(2001));
    }

    #[test]
    fn natural_resource_codes() {
        for code in ["0", "03", "1", "2", "3", "4", "68", "681"] {
            assert!(is_natural_resource(code), "{code}");
        }
        for code in ["5", "6", "69", "7", "8", "9", "S205", "", "x0"] {
            assert!(!is_natural_resource(code), "{code}");
        }
    }

    #[test]
    fn nr_increase() {
        let (t, _) = TradeTable::aggregate(
            vec![
                rec(1990, "A", "3", 10.0),
                rec(1990, "A", "7", 99.0),
                rec(2000, "A", "3", 20.0),
                rec(2000, "A", "68", 10.0),
                rec(2000, "B", "7", 1.0),
                rec(1990, "B", "7", 1.0),
            ],
            "",
        );
        let kinds = BTreeMap::new();
        assert!((nr_export_increase(&t, &kinds, 100.0, "A", 1990, 10).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(nr_export_increase(&t, &kinds, 100.0, "B", 1990, 10).unwrap(), 0.0);
        assert_eq!(
            nr_export_increase(&t, &kinds, 100.0, "A", 1995, 10).unwrap_err(),
            Error::MissingPeriod {
                country: "A".into(),
                year: 1995
            }
        );
        let mut svc = BTreeMap::new();
        svc.insert("3".to_string(), ProductKind::Service);
        assert!((nr_export_increase(&t, &svc, 100.0, "A", 1990, 10).unwrap() - 0.1).abs() < 1e-15);
    }

    fn series(entries: &[(&str, i32, f64)]) -> Series {
        entries.iter().map(|(c, y, v)| ((c.to_string(), *y), *v)).collect()
    }

    #[test]
    fn align_growth_is_log_ratio() {
        let gdp = series(&[("A", 1988, 100.0), ("A", 1998, 200.0)]);
        let panel = align_panel(&gdp, &BTreeMap::new(), &[(1988, 1998)]).unwrap();
        assert_eq!(panel.observations.len(), 1);
        assert!((panel.observations[0].growth - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((panel.observations[0].covariates[LOG_INITIAL_GDP] - libm::log(100.0)).abs() < 1e-15);
    }

    #[test]
    fn align_reports_missing_endpoint() {
        let gdp = series(&[("A", 1988, 100.0)]);
        let panel = align_panel(&gdp, &BTreeMap::new(), &[(1988, 1998)]).unwrap();
        assert!(panel.observations.is_empty());
        assert_eq!(panel.excluded[&ExclusionReason::MissingEndpoint], 1);
    }

    #[test]
    fn align_cross_product() {
        let mut entries = vec![];
        for c in ["A", "B", "C"] {
            for (y, v) in [(1988, 1.0), (1998, 2.0), (2008, 3.0)] {
                entries.push((c, y, v));
            }
        }
        let gdp = series(&entries);
        let coi = series(&entries);
        let mut cov = BTreeMap::new();
        cov.insert("coi".to_string(), coi);
        let mut panel = align_panel(&gdp, &cov, &[(1988, 1998), (1998, 2008)]).unwrap();
        assert_eq!(panel.observations.len(), 6);
        assert!(panel.excluded.is_empty());

        let dropped = panel.apply_exclusions(&[
            Exclusion {
                country: "A".into(),
                period_start: None,
            },
            Exclusion {
                country: "B".into(),
                period_start: Some(1998),
            },
        ]);
        assert_eq!(dropped, 3);
        assert_eq!(panel.excluded[&ExclusionReason::UserExcluded], 3);
    }

    #[test]
    fn align_missing_covariate() {
        let gdp = series(&[("A", 1988, 1.0), ("A", 1998, 2.0), ("B", 1988, 1.0), ("B", 1998, 2.0)]);
        let mut cov = BTreeMap::new();
        cov.insert("coi".to_string(), series(&[("A", 1988, 0.5)]));
        let panel = align_panel(&gdp, &cov, &[(1988, 1998)]).unwrap();
        assert_eq!(panel.observations.len(), 1);
        assert_eq!(panel.excluded[&ExclusionReason::MissingCovariate], 1);
    }
}
