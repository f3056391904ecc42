//! Ordinary least squares and the non-Bayesian covariance estimators:
//! model-based, HC0 sandwich, and the fixed-design grouped sandwich.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::discrete::{GroupedData, MIN_GROUP_SIZE};
use crate::error::{Error, Result};
use crate::linalg::{sandwich, symmetrize, QrSolver, DEFAULT_CONDITION_LIMIT};
use crate::summary::{ci95_from_sd, sd_from_variances, Estimator};

/// Point estimate with covariance and moment-based 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Estimator,
    pub beta: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub se: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

impl FitResult {
    pub fn new(method: Estimator, beta: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let beta: Vec<f64> = beta.iter().copied().collect();
        let (ci_low, ci_high) = ci95(&beta, cov)?;
        let se = sd_from_variances(cov.diagonal().iter().copied())?;
        Ok(Self {
            method,
            beta,
            cov: cov
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            se,
            ci_low,
            ci_high,
        })
    }
}

fn solver(data: &Dataset, condition_limit: f64) -> Result<QrSolver> {
    QrSolver::new(&data.x, &data.column_names, condition_limit)
}

/// `(XᵗX)⁻¹XᵗY` via Householder QR.
pub fn fit_ols(data: &Dataset) -> Result<DVector<f64>> {
    fit_ols_with_limit(data, DEFAULT_CONDITION_LIMIT)
}

pub fn fit_ols_with_limit(data: &Dataset, condition_limit: f64) -> Result<DVector<f64>> {
    Ok(solver(data, condition_limit)?.solve(&data.y))
}

fn residuals(data: &Dataset, beta: &DVector<f64>) -> DVector<f64> {
    &data.y - &data.x * beta
}

/// Homoscedastic covariance `σ̂²(XᵗX)⁻¹` with `σ̂² = RSS/(n − m)`.
pub fn cov_model_based(data: &Dataset, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = (data.n(), data.m());
    if n <= m {
        return Err(Error::ZeroDegreesOfFreedom { n, m });
    }
    let bread = solver(data, DEFAULT_CONDITION_LIMIT)?.xtx_inverse();
    let rss = residuals(data, beta).norm_squared();
    Ok(bread * (rss / (n - m) as f64))
}

/// HC0 sandwich `(XᵗX)⁻¹(XᵗΣX)(XᵗX)⁻¹`, `Σ = diag(e_i²)`.
pub fn cov_sandwich_hc0(data: &Dataset, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    let bread = solver(data, DEFAULT_CONDITION_LIMIT)?.xtx_inverse();
    let e = residuals(data, beta);
    let sq: Vec<f64> = e.iter().map(|v| v * v).collect();
    let meat = crate::linalg::xt_diag_x(&data.x, &sq);
    Ok(sandwich(&bread, &meat))
}

/// Fixed-design sandwich with meat `Σ†_ii = SS_k/(n_k − 3)` for row i in
/// group k, evaluated on the expanded per-row design.
pub fn cov_sandwich_fixed_groups(grouped: &GroupedData) -> Result<DMatrix<f64>> {
    grouped.require_min_count(MIN_GROUP_SIZE)?;
    let x = grouped.expanded_design();
    let diag: Vec<f64> = grouped
        .row_index
        .iter()
        .map(|&k| grouped.group_ss[k] / (grouped.counts[k] as f64 - 3.0))
        .collect();
    let bread = QrSolver::new(&x, &grouped.column_names, DEFAULT_CONDITION_LIMIT)?.xtx_inverse();
    let meat = crate::linalg::xt_diag_x(&x, &diag);
    Ok(sandwich(&bread, &meat))
}

/// `beta ± 1.96·sqrt(diag(cov))`.
pub fn ci95(beta: &[f64], cov: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let sd = sd_from_variances(cov.diagonal().iter().copied())?;
    Ok(ci95_from_sd(beta, &sd))
}

/// OLS point estimate with the covariance selected by `method`.
pub fn fit_classic(data: &Dataset, method: Estimator) -> Result<FitResult> {
    let beta = fit_ols(data)?;
    let cov = match method {
        Estimator::ModelBased => cov_model_based(data, &beta)?,
        Estimator::Sandwich => cov_sandwich_hc0(data, &beta)?,
        Estimator::SandwichFixedGroups => {
            cov_sandwich_fixed_groups(&GroupedData::from_dataset(data)?)?
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "{other:?} is not a classical estimator"
            )))
        }
    };
    FitResult::new(method, &beta, &symmetrize(&cov))
}
