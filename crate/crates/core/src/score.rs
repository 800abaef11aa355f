use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Entity {
    Country,
    Product,
}

/// Name tag carried by every score vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    Diversity,
    Ubiquity,
    MrCountry,
    MrProduct,
    Eci,
    Pci,
    Fitness,
    ProductComplexity,
}

impl Metric {
    pub const fn name(self) -> &'static str {
        match self {
            Metric::Diversity => "diversity",
            Metric::Ubiquity => "ubiquity",
            Metric::MrCountry => "mr_country",
            Metric::MrProduct => "mr_product",
            Metric::Eci => "eci",
            Metric::Pci => "pci",
            Metric::Fitness => "fitness",
            Metric::ProductComplexity => "product_complexity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Labeled scores for countries or products.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreVector {
    pub entity: Entity,
    pub metric: Metric,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(entity: Entity, metric: Metric, labels: Vec<String>, values: Vec<f64>) -> Self {
        debug_assert_eq!(labels.len(), values.len());
        ScoreVector {
            entity,
            metric,
            labels,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }

    /// Entries ordered by value descending, ties broken by label.
    pub fn sorted_desc(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ScoreVector {
        ScoreVector {
            values: self.values.iter().map(|&x| f(x)).collect(),
            ..self.clone()
        }
    }
}
