//! Rankings, rank correlations and box-plot statistics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Metric, Result, ScoreVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    /// Largest score gets rank 1.
    #[default]
    Descending,
    Ascending,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ranking {
    pub labels: Vec<String>,
    /// 1-based; tied entries share the average of their positions.
    pub ranks: Vec<f64>,
    pub source_metric: Metric,
    pub year: Option<i32>,
}

impl Ranking {
    pub fn with_year(mut self, year: i32) -> Self {
        self.year = Some(year);
        self
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.ranks[i])
    }
}

/// Ascending 1-based ranks with ties averaged.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

pub fn rank(scores: &ScoreVector, direction: Direction) -> Ranking {
    let keyed: Vec<f64> = match direction {
        Direction::Ascending => scores.values.clone(),
        Direction::Descending => scores.values.iter().map(|v| -v).collect(),
    };
    Ranking {
        labels: scores.labels.clone(),
        ranks: average_ranks(&keyed),
        source_metric: scores.metric,
        year: None,
    }
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Spearman correlation over the labels both rankings share. The shared
/// subset is re-ranked on each side before the ranks are correlated, so
/// ties are handled by the rank-Pearson form.
pub fn spearman(a: &Ranking, b: &Ranking) -> Result<f64> {
    let (ra, rb) = shared_ranks(a, b);
    if ra.len() < 3 {
        return Err(Error::InsufficientOverlap(ra.len()));
    }
    let (ra, rb) = (average_ranks(&ra), average_ranks(&rb));
    match pearson(&ra, &rb) {
        Some(r) => Ok(r),
        None if ra.iter().all(|&r| r == ra[0]) => Err(Error::ConstantRanking("left")),
        None => Err(Error::ConstantRanking("right")),
    }
}

fn shared_ranks(a: &Ranking, b: &Ranking) -> (Vec<f64>, Vec<f64>) {
    let bmap: BTreeMap<&str, f64> = b
        .labels
        .iter()
        .map(String::as_str)
        .zip(b.ranks.iter().copied())
        .collect();
    let mut pairs: Vec<(&str, f64, f64)> = a
        .labels
        .iter()
        .zip(&a.ranks)
        .filter_map(|(l, &r)| bmap.get(l.as_str()).map(|&s| (l.as_str(), r, s)))
        .collect();
    pairs.sort_by(|x, y| x.0.cmp(y.0));
    pairs.into_iter().map(|(_, r, s)| (r, s)).unzip()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct YearlyCorrelation {
    pub year: i32,
    pub rho: f64,
    /// Number of shared labels the correlation was computed on.
    pub n: usize,
}

/// Spearman correlation for every year present in both series.
pub fn yearly_rank_correlation(
    series_a: &BTreeMap<i32, ScoreVector>,
    series_b: &BTreeMap<i32, ScoreVector>,
    direction: Direction,
) -> Result<Vec<YearlyCorrelation>> {
    let mut out = Vec::new();
    for (year, a) in series_a {
        let Some(b) = series_b.get(year) else { continue };
        let (ra, rb) = (rank(a, direction), rank(b, direction));
        let n = shared_ranks(&ra, &rb).0.len();
        out.push(YearlyCorrelation {
            year: *year,
            rho: spearman(&ra, &rb)?,
            n,
        });
    }
    if out.is_empty() {
        return Err(Error::NoCommonYears);
    }
    Ok(out)
}

/// Quartiles by Tukey's hinges and the 1.5·IQR outlier fences.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Labels outside the fences, in input order.
    pub outliers: Vec<String>,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn box_stats(scores: &ScoreVector) -> Result<BoxStats> {
    let n = scores.len();
    if n < 4 {
        return Err(Error::TooFewPoints(n));
    }
    let mut sorted = scores.values.clone();
    sorted.sort_by(f64::total_cmp);
    let half = n / 2;
    let q1 = median_sorted(&sorted[..half]);
    let q3 = median_sorted(&sorted[n - half..]);
    let iqr = q3 - q1;
    let lower_fence = q1 - 1.5 * iqr;
    let upper_fence = q3 + 1.5 * iqr;
    let outliers = scores
        .iter()
        .filter(|(_, v)| *v < lower_fence || *v > upper_fence)
        .map(|(l, _)| String::from(l))
        .collect();
    Ok(BoxStats {
        median: median_sorted(&sorted),
        q1,
        q3,
        iqr,
        lower_fence,
        upper_fence,
        outliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Entity;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn sv(values: &[f64]) -> ScoreVector {
        ScoreVector::new(
            Entity::Country,
            Metric::Eci,
            (0..values.len()).map(|i| format!("c{i}")).collect(),
            values.to_vec(),
        )
    }

    fn ranking(ranks: &[f64]) -> Ranking {
        Ranking {
            labels: (0..ranks.len()).map(|i| format!("c{i}")).collect(),
            ranks: ranks.to_vec(),
            source_metric: Metric::Eci,
            year: None,
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&sv(&[5.0, 3.0, 1.0]), Direction::Descending).ranks, vec![1.0, 2.0, 3.0]);
        assert_eq!(rank(&sv(&[5.0, 5.0, 3.0]), Direction::Descending).ranks, vec![1.5, 1.5, 3.0]);
        assert_eq!(rank(&sv(&[7.0]), Direction::Descending).ranks, vec![1.0]);
        assert_eq!(rank(&sv(&[5.0, 3.0, 1.0]), Direction::Ascending).ranks, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn spearman_examples() {
        let a = ranking(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(spearman(&a, &a).unwrap(), 1.0);
        assert_eq!(spearman(&a, &ranking(&[4.0, 3.0, 2.0, 1.0])).unwrap(), -1.0);
        assert_eq!(spearman(&a, &ranking(&[1.0, 3.0, 2.0, 4.0])).unwrap(), 0.8);
    }

    #[test]
    fn spearman_uses_label_intersection() {
        let a = ranking(&[1.0, 2.0, 3.0, 4.0]);
        let mut b = ranking(&[1.0, 2.0, 3.0]);
        b.labels = vec!["c3".into(), "c2".into(), "c1".into()];
        // shared c1,c2,c3: a ranks 2,3,4 vs b ranks 3,2,1
        assert!((spearman(&a, &b).unwrap() + 1.0).abs() < 1e-15);
        b.labels.truncate(2);
        b.ranks.truncate(2);
        assert_eq!(spearman(&a, &b).unwrap_err(), Error::InsufficientOverlap(2));
    }

    #[test]
    fn spearman_constant_side() {
        let a = ranking(&[1.0, 2.0, 3.0]);
        let b = ranking(&[2.0, 2.0, 2.0]);
        assert_eq!(spearman(&a, &b).unwrap_err(), Error::ConstantRanking("right"));
    }

    #[test]
    fn yearly_correlation() {
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        a.insert(2000, sv(&[1.0, 2.0, 3.0, 4.0]));
        a.insert(2001, sv(&[4.0, 3.0, 2.0, 1.0]));
        b.insert(2001, sv(&[4.0, 2.0, 3.0, 1.0]));
        b.insert(2002, sv(&[1.0, 2.0, 3.0, 4.0]));
        let rows = yearly_rank_correlation(&a, &b, Direction::Descending).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].year, 2001);
        assert_eq!(rows[0].n, 4);
        let direct = spearman(
            &rank(&a[&2001], Direction::Descending),
            &rank(&b[&2001], Direction::Descending),
        )
        .unwrap();
        assert_eq!(rows[0].rho, direct);
        assert_eq!(rows[0].rho, 0.8);

        let same = yearly_rank_correlation(&a, &a, Direction::Descending).unwrap();
        assert!(same.iter().all(|r| r.rho == 1.0));

        let mut c = BTreeMap::new();
        c.insert(1990, sv(&[1.0, 2.0, 3.0]));
        assert_eq!(
            yearly_rank_correlation(&a, &c, Direction::Descending).unwrap_err(),
            Error::NoCommonYears
        );
    }

    #[test]
    fn box_stats_example() {
        let s = box_stats(&sv(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 100.0])).unwrap();
        assert_eq!(s.median, 4.5);
        assert_eq!(s.q1, 2.5);
        assert_eq!(s.q3, 6.5);
        assert_eq!(s.iqr, 4.0);
        assert_eq!(s.upper_fence, 12.5);
        assert_eq!(s.lower_fence, -3.5);
        assert_eq!(s.outliers, vec!["c7".to_string()]);
    }

    #[test]
    fn box_stats_odd_excludes_median() {
        let s = box_stats(&sv(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.5, 3.0, 4.5));
    }

    #[test]
    fn box_stats_flat_and_small() {
        let s = box_stats(&sv(&[2.0; 6])).unwrap();
        assert_eq!(s.iqr, 0.0);
        assert!(s.outliers.is_empty());
        assert_eq!(box_stats(&sv(&[1.0, 2.0, 3.0])).unwrap_err(), Error::TooFewPoints(3));
    }
}
