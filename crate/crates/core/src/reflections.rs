//! Diversity and ubiquity, the method of reflections, and the spectral
//! ECI/PCI.
//!
//! Both coupling matrices are row-stochastic and similar to a symmetric
//! positive semi-definite matrix:
//!
//! ```text
//! C̃ = D⁻¹ M U⁻¹ Mᵀ = D^{-1/2} (A Aᵀ) D^{1/2}      A = D^{-1/2} M U^{-1/2}
//! P̃ = U⁻¹ Mᵀ D⁻¹ M = U^{-1/2} (Aᵀ A) U^{1/2}
//! ```
//!
//! so their spectra are real and nonnegative and the eigenvectors are
//! recovered from the symmetric problem by rescaling with `D^{-1/2}` (or
//! `U^{-1/2}`). The returned eigenvector is checked against the
//! unsymmetrised coupling matrix.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{symmetric_eigen, Matrix};
use crate::rca::IncidenceMatrix;
use crate::{Entity, Error, Metric, Result, ScoreVector};

pub fn diversity(m: &IncidenceMatrix) -> ScoreVector {
    ScoreVector::new(
        Entity::Country,
        Metric::Diversity,
        m.countries().to_vec(),
        m.diversity_counts().into_iter().map(|d| d as f64).collect(),
    )
}

pub fn ubiquity(m: &IncidenceMatrix) -> ScoreVector {
    ScoreVector::new(
        Entity::Product,
        Metric::Ubiquity,
        m.products().to_vec(),
        m.ubiquity_counts().into_iter().map(|u| u as f64).collect(),
    )
}

/// Runs `n` reflections starting from `c₀ = d`, `p₀ = u`:
///
/// ```text
/// c_n(i) = (1/d_i) Σ_j M_ij p_{n−1}(j)
/// p_n(j) = (1/u_j) Σ_i M_ij c_{n−1}(i)
/// ```
///
/// Raw reflections alternate between two limits; this is a diagnostic, the
/// reported indices come from [`eci`] and [`pci`].
pub fn mr_iterate(m: &IncidenceMatrix, n: usize) -> (ScoreVector, ScoreVector) {
    let d: Vec<f64> = m.diversity_counts().into_iter().map(|x| x as f64).collect();
    let u: Vec<f64> = m.ubiquity_counts().into_iter().map(|x| x as f64).collect();
    let rows = m.country_links();
    let cols = m.product_links();
    let mut c = d.clone();
    let mut p = u.clone();
    for _ in 0..n {
        let c_next: Vec<f64> = rows
            .iter()
            .zip(&d)
            .map(|(links, di)| links.iter().map(|&j| p[j]).sum::<f64>() / di)
            .collect();
        let p_next: Vec<f64> = cols
            .iter()
            .zip(&u)
            .map(|(links, uj)| links.iter().map(|&i| c[i]).sum::<f64>() / uj)
            .collect();
        c = c_next;
        p = p_next;
    }
    (
        ScoreVector::new(Entity::Country, Metric::MrCountry, m.countries().to_vec(), c),
        ScoreVector::new(Entity::Product, Metric::MrProduct, m.products().to_vec(), p),
    )
}

/// `C̃_ii' = Σ_j M_ij M_i'j / (d_i u_j)` for countries, and
/// `P̃_jj' = Σ_i M_ij M_ij' / (d_i u_j)` for products. Note that the product
/// matrix divides by the ubiquity of the row product `j`, which makes it
/// row-stochastic.
pub fn coupling_matrix(m: &IncidenceMatrix, entity: Entity) -> Matrix {
    let d: Vec<f64> = m.diversity_counts().into_iter().map(|x| x as f64).collect();
    let u: Vec<f64> = m.ubiquity_counts().into_iter().map(|x| x as f64).collect();
    match entity {
        Entity::Country => {
            let n = m.n_countries();
            let cols = m.product_links();
            let mut out = Matrix::zeros(n, n);
            for (j, exporters) in cols.iter().enumerate() {
                for &i in exporters {
                    for &k in exporters {
                        out[(i, k)] += 1.0 / (d[i] * u[j]);
                    }
                }
            }
            out
        }
        Entity::Product => {
            let n = m.n_products();
            let rows = m.country_links();
            let mut out = Matrix::zeros(n, n);
            for (i, basket) in rows.iter().enumerate() {
                for &j in basket {
                    for &k in basket {
                        out[(j, k)] += 1.0 / (d[i] * u[j]);
                    }
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralResult {
    /// Second-largest eigenvalue of the coupling matrix.
    pub eigenvalue: f64,
    /// Third eigenvalue, when the matrix has one.
    pub next_eigenvalue: Option<f64>,
    /// Unit-norm eigenvector after orientation, before standardisation.
    pub eigenvector: ScoreVector,
    /// `‖C̃v − λ₂v‖_∞` for the unit-norm eigenvector.
    pub residual: f64,
    pub orientation_sign: f64,
}

/// Economic complexity index: the standardised eigenvector of `C̃` for its
/// second-largest eigenvalue, signed to correlate nonnegatively with
/// diversity.
pub fn eci(m: &IncidenceMatrix, tol: f64) -> Result<(ScoreVector, SpectralResult)> {
    spectral_index(m, Entity::Country, tol)
}

/// Product complexity index: as [`eci`] on `P̃`, signed to correlate
/// nonpositively with ubiquity.
pub fn pci(m: &IncidenceMatrix, tol: f64) -> Result<(ScoreVector, SpectralResult)> {
    spectral_index(m, Entity::Product, tol)
}

fn spectral_index(
    m: &IncidenceMatrix,
    entity: Entity,
    tol: f64,
) -> Result<(ScoreVector, SpectralResult)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let d: Vec<f64> = m.diversity_counts().into_iter().map(|x| x as f64).collect();
    let u: Vec<f64> = m.ubiquity_counts().into_iter().map(|x| x as f64).collect();
    let (labels, metric, degree, n): (&[String], Metric, &[f64], usize) = match entity {
        Entity::Country => (m.countries(), Metric::Eci, &d, m.n_countries()),
        Entity::Product => (m.products(), Metric::Pci, &u, m.n_products()),
    };
    if n < 2 {
        return Err(Error::DegenerateSpectrum(format!(
            "need at least two {}s, got {n}",
            entity_name(entity)
        )));
    }

    let sym = symmetrised_coupling(m, entity, &d, &u);
    let eig = symmetric_eigen(&sym)
        .ok_or_else(|| Error::DegenerateSpectrum("eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| libm::fabs(eig.values[b]).total_cmp(&libm::fabs(eig.values[a])));
    let lead = eig.values[order[0]];
    let lambda2 = eig.values[order[1]];
    let lambda3 = order.get(2).map(|&k| eig.values[k]);
    if libm::fabs(libm::fabs(lambda2) - libm::fabs(lead)) <= tol || libm::fabs(libm::fabs(lambda2) - 1.0) <= tol {
        return Err(Error::DegenerateSpectrum(format!(
            "second eigenvalue {lambda2} coincides with the leading one (graph not connected?)"
        )));
    }
    if let Some(l3) = lambda3 {
        if libm::fabs(libm::fabs(lambda2) - libm::fabs(l3)) <= tol {
            return Err(Error::DegenerateSpectrum(format!(
                "second eigenvalue {lambda2} is not separated from the third {l3}"
            )));
        }
    }

    let w = eig.vector(order[1]);
    let mut v: Vec<f64> = w
        .iter()
        .zip(degree)
        .map(|(wi, k)| wi / libm::sqrt(*k))
        .collect();
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    v.iter_mut().for_each(|x| *x /= norm);

    let coupling = coupling_matrix(m, entity);
    let cv = coupling.matvec(&v);
    let residual = cv
        .iter()
        .zip(&v)
        .map(|(a, b)| libm::fabs(a - lambda2 * b))
        .fold(0.0, f64::max);
    if !(residual < tol) {
        return Err(Error::EigenResidual { residual, tol });
    }

    let mut z = standardize(&v);
    let reference = match entity {
        Entity::Country => covariance(&z, &d),
        Entity::Product => -covariance(&z, &u),
    };
    let sign = if libm::fabs(reference) > 1e-12 {
        if reference < 0.0 {
            -1.0
        } else {
            1.0
        }
    } else {
        // Uncorrelated with the degree: fall back to positive skew.
        let skew: f64 = z.iter().map(|x| x * x * x).sum();
        if skew < -1e-12 {
            -1.0
        } else {
            1.0
        }
    };
    if sign < 0.0 {
        z.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }

    let index = ScoreVector::new(entity, metric, labels.to_vec(), z);
    let spectral = SpectralResult {
        eigenvalue: lambda2,
        next_eigenvalue: lambda3,
        eigenvector: ScoreVector::new(entity, metric, labels.to_vec(), v),
        residual,
        orientation_sign: sign,
    };
    Ok((index, spectral))
}

fn entity_name(e: Entity) -> &'static str {
    match e {
        Entity::Country => "country",
        Entity::Product => "product",
    }
}

// A A^T (countries) or A^T A (products) with A_ij = M_ij / sqrt(d_i u_j).
fn symmetrised_coupling(m: &IncidenceMatrix, entity: Entity, d: &[f64], u: &[f64]) -> Matrix {
    match entity {
        Entity::Country => {
            let n = m.n_countries();
            let mut s = Matrix::zeros(n, n);
            for (j, exporters) in m.product_links().iter().enumerate() {
                for &i in exporters {
                    for &k in exporters {
                        s[(i, k)] += 1.0 / (libm::sqrt(d[i] * d[k]) * u[j]);
                    }
                }
            }
            s
        }
        Entity::Product => {
            let n = m.n_products();
            let mut s = Matrix::zeros(n, n);
            for (i, basket) in m.country_links().iter().enumerate() {
                for &j in basket {
                    for &k in basket {
                        s[(j, k)] += 1.0 / (d[i] * libm::sqrt(u[j] * u[k]));
                    }
                }
            }
            s
        }
    }
}

/// `(x − mean) / sd` with the sample (n − 1) standard deviation.
pub fn standardize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = libm::sqrt(var);
    if sd == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mean) / sd).collect()
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n
}
