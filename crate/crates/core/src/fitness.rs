//! Fitness-complexity iteration and its modified variant.
//!
//! Each step updates countries from the current product scores, then
//! products from the freshly normalised country scores:
//!
//! ```text
//! c̃_i = Σ_j M_ij p_j                       c = c̃ / ⟨c̃⟩
//! p̃_j = 1 / Σ_i M_ij w(c_i)                p = p̃ / ⟨p̃⟩
//! ```
//!
//! with `w(c) = 1/c` for the original method and `w(c) = N_c − c` for the
//! modified one. Both start from `c = p = 1`. Normalisation keeps
//! `Σ c = N_c` and `Σ p = N_p` after every step.
//!
//! Every steady state of the modified map satisfies `0 < c_i < N_c`, but a
//! trajectory can still run towards `c_i → N_c` when the matrix has no
//! interior fixed point (perfectly nested matrices do this). The
//! original map can instead send weak countries to zero. Both symptoms are
//! reported as verdicts rather than errors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::neumaier_sum;
use crate::rca::IncidenceMatrix;
use crate::{Entity, Error, Metric, Result, ScoreVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    /// `p̃_j = 1 / Σ_i M_ij / c_i`
    Fcm,
    /// `p̃_j = 1 / Σ_i M_ij (N_c − c_i)`
    Mfcm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fcm => "fcm",
            Method::Mfcm => "mfcm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitnessConfig {
    /// Stop when the max-norm change of both score vectors drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Country score below which a still-falling trajectory counts as
    /// converging to zero (original method).
    pub zero_floor: f64,
    /// Relative distance to `N_c` below which a still-rising maximum counts
    /// as drifting to the singular boundary (modified method).
    pub boundary_margin: f64,
    /// Number of consecutive monotone steps required by both drift rules.
    pub window: usize,
    /// Every step up to `trajectory_head` is recorded, then every
    /// `trajectory_stride`-th.
    pub trajectory_head: usize,
    pub trajectory_stride: usize,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            tol: 1e-10,
            max_iter: 100_000,
            zero_floor: 1e-4,
            boundary_margin: 1e-3,
            window: 100,
            trajectory_head: 100,
            trajectory_stride: 100,
        }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.zero_floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "zero_floor must be positive, got {}",
                self.zero_floor
            )));
        }
        if !(self.boundary_margin > 0.0 && self.boundary_margin < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "boundary_margin must lie in (0, 1), got {}",
                self.boundary_margin
            )));
        }
        if self.trajectory_stride == 0 {
            return Err(Error::InvalidParameter("trajectory_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Converged,
    ZeroConvergence,
    BoundaryDrift,
    MaxIterations,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::ZeroConvergence => "zero_convergence",
            Verdict::BoundaryDrift => "boundary_drift",
            Verdict::MaxIterations => "max_iterations",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub min_country: f64,
    pub max_country: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointResult {
    pub method: Method,
    pub country_scores: ScoreVector,
    pub product_scores: ScoreVector,
    /// Unnormalised `p̃` from the last step.
    pub product_raw: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub verdict: Verdict,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// One step's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub iteration: usize,
    pub residual: f64,
    pub min_country: f64,
    pub max_country: f64,
}

/// Stepwise driver for either method. [`fcm`] and [`mfcm`] wrap it with the
/// stopping rules; use it directly to inspect individual iterates.
#[derive(Debug, Clone)]
pub struct FitnessIteration<'a> {
    method: Method,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    matrix: &'a IncidenceMatrix,
    c: Vec<f64>,
    p: Vec<f64>,
    p_raw: Vec<f64>,
    iteration: usize,
}

impl<'a> FitnessIteration<'a> {
    pub fn new(m: &'a IncidenceMatrix, method: Method) -> Self {
        FitnessIteration {
            method,
            rows: m.country_links(),
            cols: m.product_links(),
            matrix: m,
            c: vec![1.0; m.n_countries()],
            p: vec![1.0; m.n_products()],
            p_raw: vec![1.0; m.n_products()],
            iteration: 0,
        }
    }

    pub fn countries(&self) -> &[f64] {
        &self.c
    }

    pub fn products(&self) -> &[f64] {
        &self.p
    }

    pub fn products_raw(&self) -> &[f64] {
        &self.p_raw
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Advances one step. Fails only for the modified method when an
    /// exporter sum `Σ_i M_ij (N_c − c_i)` is not positive.
    pub fn step(&mut self) -> Result<Step> {
        let nc = self.c.len() as f64;
        let c_tilde: Vec<f64> = self
            .rows
            .iter()
            .map(|links| links.iter().map(|&j| self.p[j]).sum())
            .collect();
        let c_mean = neumaier_sum(c_tilde.iter().copied()) / nc;
        let c_next: Vec<f64> = c_tilde.iter().map(|x| x / c_mean).collect();

        let mut p_tilde = Vec::with_capacity(self.p.len());
        for (j, exporters) in self.cols.iter().enumerate() {
            let denom = match self.method {
                Method::Fcm => neumaier_sum(exporters.iter().map(|&i| 1.0 / c_next[i])),
                Method::Mfcm => neumaier_sum(exporters.iter().map(|&i| nc - c_next[i])),
            };
            if self.method == Method::Mfcm && !(denom > 0.0) {
                return Err(Error::SingularUpdate {
                    product: self.matrix.products()[j].clone(),
                    denominator: denom,
                    iteration: self.iteration + 1,
                });
            }
            p_tilde.push(1.0 / denom);
        }
        let p_mean = neumaier_sum(p_tilde.iter().copied()) / self.p.len() as f64;
        let p_next: Vec<f64> = p_tilde.iter().map(|x| x / p_mean).collect();

        let residual = max_abs_diff(&c_next, &self.c).max(max_abs_diff(&p_next, &self.p));
        self.c = c_next;
        self.p = p_next;
        self.p_raw = p_tilde;
        self.iteration += 1;
        let (min_country, max_country) = min_max(&self.c);
        Ok(Step {
            iteration: self.iteration,
            residual,
            min_country,
            max_country,
        })
    }

    fn all_positive(&self) -> bool {
        self.c.iter().chain(&self.p).all(|&x| x > 0.0 && x.is_finite())
    }

    fn finish(
        self,
        residual: f64,
        verdict: Verdict,
        trajectory: Vec<TrajectoryPoint>,
    ) -> FixedPointResult {
        FixedPointResult {
            method: self.method,
            country_scores: ScoreVector::new(
                Entity::Country,
                Metric::Fitness,
                self.matrix.countries().to_vec(),
                self.c,
            ),
            product_scores: ScoreVector::new(
                Entity::Product,
                Metric::ProductComplexity,
                self.matrix.products().to_vec(),
                self.p,
            ),
            product_raw: self.p_raw,
            iterations: self.iteration,
            residual,
            verdict,
            trajectory,
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| libm::fabs(x - y))
        .fold(0.0, |m, d| if d > m || d.is_nan() { d } else { m })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Original fitness-complexity iteration.
pub fn fcm(m: &IncidenceMatrix, cfg: &FitnessConfig) -> Result<FixedPointResult> {
    run(m, Method::Fcm, cfg)
}

/// Modified fitness-complexity iteration.
pub fn mfcm(m: &IncidenceMatrix, cfg: &FitnessConfig) -> Result<FixedPointResult> {
    run(m, Method::Mfcm, cfg)
}

pub fn run(m: &IncidenceMatrix, method: Method, cfg: &FitnessConfig) -> Result<FixedPointResult> {
    cfg.validate()?;
    let nc = m.n_countries() as f64;
    let mut it = FitnessIteration::new(m, method);
    let mut trajectory = Vec::new();
    let mut prev_min = 1.0;
    let mut prev_gap = nc - 1.0;
    let mut falling_min = 0usize;
    let mut closing_gap = 0usize;

    loop {
        let step = it.step()?;
        let n = step.iteration;
        let gap = nc - step.max_country;
        falling_min = if step.min_country < prev_min { falling_min + 1 } else { 0 };
        closing_gap = if gap < prev_gap { closing_gap + 1 } else { 0 };
        prev_min = step.min_country;
        prev_gap = gap;

        let positive = it.all_positive();
        let verdict = if !positive && method == Method::Fcm {
            // Underflow: the decay has reached zero in floating point.
            Some(Verdict::ZeroConvergence)
        } else if step.residual < cfg.tol
            && (method == Method::Fcm || (step.min_country > 0.0 && step.max_country < nc))
        {
            Some(Verdict::Converged)
        } else if method == Method::Fcm && step.min_country < cfg.zero_floor && falling_min >= cfg.window {
            Some(Verdict::ZeroConvergence)
        } else if method == Method::Mfcm
            && gap < cfg.boundary_margin * nc
            && closing_gap >= cfg.window
        {
            Some(Verdict::BoundaryDrift)
        } else if n >= cfg.max_iter {
            Some(Verdict::MaxIterations)
        } else {
            None
        };

        if verdict.is_some() || n <= cfg.trajectory_head || n % cfg.trajectory_stride == 0 {
            trajectory.push(TrajectoryPoint {
                iteration: n,
                min_country: step.min_country,
                max_country: step.max_country,
                residual: step.residual,
            });
        }
        if let Some(v) = verdict {
            return Ok(it.finish(step.residual, v, trajectory));
        }
    }
}

/// Second-order comparison of `1/c` with `(4/N_c²)(N_c − c)` around
/// `c = N_c/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCheck {
    pub exact: f64,
    pub approx: f64,
    /// `|1/(1+δ) − (1−δ)|` with `δ = 2c/N_c − 1`, i.e. the error of the
    /// approximation measured in units of `2/N_c`.
    pub rel_err: f64,
}

pub fn taylor_consistency(c: f64, n_c: usize) -> Result<TaylorCheck> {
    let n = n_c as f64;
    if n_c == 0 || !(c > 0.0 && c < 2.0 * n) {
        return Err(Error::InvalidParameter(format!("need 0 < c < 2·N_c, got c={c}, N_c={n_c}")));
    }
    let delta = 2.0 * c / n - 1.0;
    Ok(TaylorCheck {
        exact: 1.0 / c,
        approx: 4.0 / (n * n) * (n - c),
        rel_err: libm::fabs(1.0 / (1.0 + delta) - (1.0 - delta)),
    })
}
