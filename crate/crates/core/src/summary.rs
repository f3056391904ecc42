use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal-quantile multiplier for the moment-based 95% interval.
pub const Z95: f64 = 1.96;

/// Identifies which estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    ModelBased,
    Sandwich,
    SandwichFixedGroups,
    BayesRandomX,
    BayesFixedXClosed,
    BayesFixedXMc,
    BayesSplineRandomX,
    BayesSplineFixedX,
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::ModelBased => "Model based",
            Estimator::Sandwich => "Sandwich",
            Estimator::SandwichFixedGroups => "Sandwich (fixed groups)",
            Estimator::BayesRandomX => "Bayes robust (random X)",
            Estimator::BayesFixedXClosed => "Bayes robust (fixed X)",
            Estimator::BayesFixedXMc => "Bayes robust (fixed X, MC)",
            Estimator::BayesSplineRandomX => "Bayes robust (random X)",
            Estimator::BayesSplineFixedX => "Bayes robust (fixed X)",
        }
    }
}

/// Whether the covariate distribution in the β functional is random
/// (posterior Dirichlet over the observed atoms) or the fixed empirical
/// measure of the realized design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XMode {
    Random,
    Fixed,
}

impl XMode {
    pub fn label(self) -> &'static str {
        match self {
            XMode::Random => "random X",
            XMode::Fixed => "fixed X",
        }
    }
}

/// Elementwise `beta ± 1.96·sqrt(diag)`.
///
/// Diagonal entries in `[-1e-12, 0)` are rounding noise and clamped to zero.
pub fn ci95_from_sd(beta: &[f64], sd: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let low = beta.iter().zip(sd).map(|(b, s)| b - Z95 * s).collect();
    let high = beta.iter().zip(sd).map(|(b, s)| b + Z95 * s).collect();
    (low, high)
}

pub(crate) fn sd_from_variances(diag: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    diag.enumerate()
        .map(|(j, v)| {
            if v.is_nan() || v < -1e-12 {
                Err(Error::Numerical(format!("variance {j} is {v}")))
            } else {
                Ok(v.max(0.0).sqrt())
            }
        })
        .collect()
}

/// Posterior summary of the β functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub method: Estimator,
    pub beta_hat: Vec<f64>,
    pub sd: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Number of Monte Carlo draws; 0 for closed-form results.
    pub n_draws: usize,
    /// Jackknife Monte Carlo standard error of each `sd` entry.
    pub mc_se_sd: Option<Vec<f64>>,
    /// Draws discarded because the weighted design was singular.
    pub rejected_draws: usize,
}

/// Number of blocks used for the jackknife MC error of the posterior SD.
const JACKKNIFE_BLOCKS: usize = 20;

impl PosteriorSummary {
    pub fn closed_form(method: Estimator, beta_hat: Vec<f64>, sd: Vec<f64>) -> Self {
        let (ci_low, ci_high) = ci95_from_sd(&beta_hat, &sd);
        Self {
            method,
            beta_hat,
            sd,
            ci_low,
            ci_high,
            n_draws: 0,
            mc_se_sd: None,
            rejected_draws: 0,
        }
    }

    /// Mean, SD (n − 1 divisor), and jackknife-over-blocks MC error from
    /// draws stored draw-major (`draws[d][j]`).
    pub fn from_draws(
        method: Estimator,
        draws: &[Vec<f64>],
        rejected_draws: usize,
    ) -> Result<Self> {
        let n = draws.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "{n} draws; at least 2 required"
            )));
        }
        let m = draws[0].len();
        let mut beta_hat = vec![0.0; m];
        let mut sd = vec![0.0; m];
        for j in 0..m {
            let (mean, var) = mean_var(draws.iter().map(|d| d[j]));
            beta_hat[j] = mean;
            sd[j] = var.sqrt();
        }
        let mc_se_sd = if n >= 2 * JACKKNIFE_BLOCKS {
            Some((0..m).map(|j| jackknife_sd_error(draws, j)).collect())
        } else {
            None
        };
        let (ci_low, ci_high) = ci95_from_sd(&beta_hat, &sd);
        Ok(Self {
            method,
            beta_hat,
            sd,
            ci_low,
            ci_high,
            n_draws: n,
            mc_se_sd,
            rejected_draws,
        })
    }
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut count = 0usize;
    let mut sum = 0.0;
    for v in values.clone() {
        sum += v;
        count += 1;
    }
    let mean = sum / count as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (count as f64 - 1.0))
}

fn jackknife_sd_error(draws: &[Vec<f64>], j: usize) -> f64 {
    let n = draws.len();
    let b = JACKKNIFE_BLOCKS;
    let size = n / b;
    // leave-one-block-out SDs; the trailing remainder stays in every replicate
    let loo: Vec<f64> = (0..b)
        .map(|k| {
            let kept = draws
                .iter()
                .enumerate()
                .filter(|(i, _)| *i / size != k || *i >= size * b)
                .map(|(_, d)| d[j]);
            mean_var(kept).1.sqrt()
        })
        .collect();
    let avg = loo.iter().sum::<f64>() / b as f64;
    let spread: f64 = loo.iter().map(|s| (s - avg).powi(2)).sum();
    ((b as f64 - 1.0) / b as f64 * spread).sqrt()
}
