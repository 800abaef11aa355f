//! Balassa revealed comparative advantage and the binary incidence matrix.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{ExportMatrix, ProductKind, Pruned};
use crate::linalg::{neumaier_sum, Matrix};
use crate::{Axis, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RcaVariant {
    /// One normalisation over all products.
    #[default]
    Joint,
    /// Goods and services normalised separately, then placed side by side.
    Concatenated,
}

impl fmt::Display for RcaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RcaVariant::Joint => "joint",
            RcaVariant::Concatenated => "concatenated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    pub year: i32,
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub kinds: Vec<ProductKind>,
    pub values: Matrix,
    pub variant: RcaVariant,
}

/// `RCA_ij = (E_ij / Σ_j E_ij) / (Σ_i E_ij / Σ_ij E_ij)`.
pub fn rca(ex: &ExportMatrix) -> Result<RcaMatrix> {
    let values = rca_values(&ex.values, &ex.countries, &ex.products)?;
    Ok(RcaMatrix {
        year: ex.year,
        countries: ex.countries.clone(),
        products: ex.products.clone(),
        kinds: ex.kinds.clone(),
        values,
        variant: RcaVariant::Joint,
    })
}

fn rca_values(e: &Matrix, countries: &[String], products: &[String]) -> Result<Matrix> {
    let row_tot = e.row_sums();
    let col_tot = e.col_sums();
    if let Some(i) = row_tot.iter().position(|&t| !(t > 0.0)) {
        return Err(Error::ZeroMarginal {
            axis: Axis::Country,
            label: countries[i].clone(),
        });
    }
    if let Some(j) = col_tot.iter().position(|&t| !(t > 0.0)) {
        return Err(Error::ZeroMarginal {
            axis: Axis::Product,
            label: products[j].clone(),
        });
    }
    let total = neumaier_sum(row_tot.iter().copied());
    let mut out = Matrix::zeros(e.nrows(), e.ncols());
    for i in 0..e.nrows() {
        for j in 0..e.ncols() {
            let eij = e[(i, j)];
            if eij > 0.0 {
                out[(i, j)] = (eij / row_tot[i]) / (col_tot[j] / total);
            }
        }
    }
    Ok(out)
}

/// RCA computed separately within the goods columns and within the
/// service columns; the two blocks keep their original column positions.
pub fn concatenated_rca(ex: &ExportMatrix) -> Result<RcaMatrix> {
    let goods: Vec<usize> = kind_columns(ex, ProductKind::Good);
    let services: Vec<usize> = kind_columns(ex, ProductKind::Service);
    if goods.is_empty() {
        return Err(Error::MissingKind("good"));
    }
    if services.is_empty() {
        return Err(Error::MissingKind("service"));
    }
    let rows: Vec<usize> = (0..ex.n_countries()).collect();
    let mut values = Matrix::zeros(ex.n_countries(), ex.n_products());
    for block in [&goods, &services] {
        let sub = ex.values.select(&rows, block);
        let labels: Vec<String> = block.iter().map(|&j| ex.products[j].clone()).collect();
        let r = rca_values(&sub, &ex.countries, &labels)?;
        for i in 0..ex.n_countries() {
            for (bj, &j) in block.iter().enumerate() {
                values[(i, j)] = r[(i, bj)];
            }
        }
    }
    Ok(RcaMatrix {
        year: ex.year,
        countries: ex.countries.clone(),
        products: ex.products.clone(),
        kinds: ex.kinds.clone(),
        values,
        variant: RcaVariant::Concatenated,
    })
}

fn kind_columns(ex: &ExportMatrix, kind: ProductKind) -> Vec<usize> {
    (0..ex.n_products()).filter(|&j| ex.kinds[j] == kind).collect()
}

/// Cut-off applied to RCA values. The default links a country to a product
/// when `RCA ≥ 1`; `strict` switches to `RCA > value`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Threshold {
    pub value: f64,
    pub strict: bool,
}

impl Threshold {
    pub const fn at_least(value: f64) -> Self {
        Threshold { value, strict: false }
    }

    pub const fn above(value: f64) -> Self {
        Threshold { value, strict: true }
    }

    pub fn admits(&self, rca: f64) -> bool {
        if self.strict {
            rca > self.value
        } else {
            rca >= self.value
        }
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::at_least(1.0)
    }
}

/// Binary country × product matrix in which every row and column has at
/// least one link.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub year: i32,
    countries: Vec<String>,
    products: Vec<String>,
    kinds: Vec<ProductKind>,
    bits: Vec<u8>,
    pub threshold: Threshold,
}

impl IncidenceMatrix {
    /// `bits` is row-major with entries 0 or 1.
    pub fn new(
        countries: Vec<String>,
        products: Vec<String>,
        kinds: Vec<ProductKind>,
        bits: Vec<u8>,
    ) -> Result<Self> {
        let (nc, np) = (countries.len(), products.len());
        if nc == 0 || np == 0 {
            return Err(Error::InvalidIncidence("matrix has no rows or no columns".into()));
        }
        if bits.len() != nc * np || kinds.len() != np {
            return Err(Error::InvalidIncidence("shape does not match labels".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidIncidence("entries must be 0 or 1".into()));
        }
        let m = IncidenceMatrix {
            year: 0,
            countries,
            products,
            kinds,
            bits,
            threshold: Threshold::default(),
        };
        if let Some(i) = m.diversity_counts().iter().position(|&d| d == 0) {
            return Err(Error::InvalidIncidence(format!("country `{}` has no links", m.countries[i])));
        }
        if let Some(j) = m.ubiquity_counts().iter().position(|&u| u == 0) {
            return Err(Error::InvalidIncidence(format!("product `{}` has no links", m.products[j])));
        }
        Ok(m)
    }

    /// Unlabeled matrix (countries `c0..`, products `p0..`, all goods).
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let np = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != np) {
            return Err(Error::InvalidIncidence("ragged rows".into()));
        }
        let bits = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        IncidenceMatrix::new(
            (0..rows.len()).map(|i| format!("c{i}")).collect(),
            (0..np).map(|j| format!("p{j}")).collect(),
            vec![ProductKind::Good; np],
            bits,
        )
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn kinds(&self) -> &[ProductKind] {
        &self.kinds
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.products.len() + j] == 1
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let np = self.products.len();
        &self.bits[i * np..(i + 1) * np]
    }

    pub fn diversity_counts(&self) -> Vec<usize> {
        (0..self.n_countries())
            .map(|i| self.row(i).iter().map(|&b| b as usize).sum())
            .collect()
    }

    pub fn ubiquity_counts(&self) -> Vec<usize> {
        let mut u = vec![0usize; self.n_products()];
        for i in 0..self.n_countries() {
            for (uj, &b) in u.iter_mut().zip(self.row(i)) {
                *uj += b as usize;
            }
        }
        u
    }

    /// Products exported by each country.
    pub fn country_links(&self) -> Vec<Vec<usize>> {
        (0..self.n_countries())
            .map(|i| (0..self.n_products()).filter(|&j| self.get(i, j)).collect())
            .collect()
    }

    /// Exporters of each product.
    pub fn product_links(&self) -> Vec<Vec<usize>> {
        (0..self.n_products())
            .map(|j| (0..self.n_countries()).filter(|&i| self.get(i, j)).collect())
            .collect()
    }

    pub fn link_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Reorders rows and columns: row `k` of the result is row `rows[k]` of
    /// `self`. Both slices must be permutations.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> IncidenceMatrix {
        assert_eq!(rows.len(), self.n_countries());
        assert_eq!(cols.len(), self.n_products());
        let mut bits = Vec::with_capacity(self.bits.len());
        for &i in rows {
            for &j in cols {
                bits.push(self.bits[i * self.n_products() + j]);
            }
        }
        IncidenceMatrix {
            year: self.year,
            countries: rows.iter().map(|&i| self.countries[i].clone()).collect(),
            products: cols.iter().map(|&j| self.products[j].clone()).collect(),
            kinds: cols.iter().map(|&j| self.kinds[j]).collect(),
            bits,
            threshold: self.threshold,
        }
    }

    pub fn with_year(mut self, year: i32) -> Self {
        self.year = year;
        self
    }
}

/// Thresholds RCA into links, then removes countries and products without
/// links until none remain.
pub fn binarize(r: &RcaMatrix, threshold: Threshold) -> Result<(IncidenceMatrix, Pruned)> {
    if !(threshold.value > 0.0) || !threshold.value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {}",
            threshold.value
        )));
    }
    let (nc, np) = (r.values.nrows(), r.values.ncols());
    let bit = |i: usize, j: usize| threshold.admits(r.values[(i, j)]);

    let mut rows: Vec<usize> = (0..nc).collect();
    let mut cols: Vec<usize> = (0..np).collect();
    loop {
        let rows_next: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&i| cols.iter().any(|&j| bit(i, j)))
            .collect();
        let cols_next: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&j| rows_next.iter().any(|&i| bit(i, j)))
            .collect();
        let stable = rows_next.len() == rows.len() && cols_next.len() == cols.len();
        rows = rows_next;
        cols = cols_next;
        if stable {
            break;
        }
    }
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptyAfterPrune);
    }
    let pruned = Pruned {
        countries: (0..nc)
            .filter(|i| !rows.contains(i))
            .map(|i| r.countries[i].clone())
            .collect(),
        products: (0..np)
            .filter(|j| !cols.contains(j))
            .map(|j| r.products[j].clone())
            .collect(),
    };
    let mut bits = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &j in &cols {
            bits.push(bit(i, j) as u8);
        }
    }
    let m = IncidenceMatrix {
        year: r.year,
        countries: rows.iter().map(|&i| r.countries[i].clone()).collect(),
        products: cols.iter().map(|&j| r.products[j].clone()).collect(),
        kinds: cols.iter().map(|&j| r.kinds[j]).collect(),
        bits,
        threshold,
    };
    Ok((m, pruned))
}
