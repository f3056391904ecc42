//! Posterior of the β functional for a continuous scalar covariate.
//!
//! For every retained spline draw, φ is evaluated at the observed covariate
//! values only and regressed on `(1, x)`. Random-X inference weights the
//! observations with Bayesian-bootstrap Dirichlet(1, …, 1) weights (repeated
//! x values aggregate automatically); fixed-X inference uses the empirical
//! weights 1/n.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mcmc::{mcmc_fit, scalar_covariate, McmcConfig, SplineChain};
use crate::spline::build_basis;
use crate::stochastics::{sample_dirichlet_flat, RngStream};
use crate::summary::{Estimator, PosteriorSummary, XMode};

const DRAW_CHUNK: usize = 256;
const MAX_REDRAWS: usize = 1000;

/// Weighted simple regression of `phi` on `(1, x)`. `None` when the weighted
/// spread of `x` has collapsed.
fn weighted_line(x: &[f64], phi: &[f64], w: &[f64], spread_floor: f64) -> Option<[f64; 2]> {
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * phi[i];
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..x.len() {
        let dx = x[i] - mx;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (phi[i] - my);
    }
    sxx /= sw;
    sxy /= sw;
    if !(sxx > spread_floor) {
        return None;
    }
    let slope = sxy / sxx;
    Some([my - slope * mx, slope])
}

/// Posterior summary of β from a fitted spline chain.
pub fn posterior_beta_continuous(
    data: &Dataset,
    chain: &SplineChain,
    mode: XMode,
    rng: &mut RngStream,
) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::InvalidInput("empty chain".into()));
    }
    let x = scalar_covariate(data)?;
    if x != chain.basis.x {
        return Err(Error::InvalidInput(
            "chain was not fitted to this dataset's covariate".into(),
        ));
    }
    let n = x.len();
    let design: DMatrix<f64> = chain.basis.full_design();
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let var_x = x.iter().map(|v| (v - mean_x).powi(2)).sum::<f64>() / n as f64;
    let spread_floor = 1e-12 * var_x;
    let uniform = vec![1.0 / n as f64; n];

    let n_draws = chain.len();
    let n_chunks = n_draws.div_ceil(DRAW_CHUNK);
    let chunks: Result<Vec<(Vec<Vec<f64>>, usize)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut sub = rng.substream(c as u64);
            let mut weights = Vec::with_capacity(n);
            let mut rejected = 0usize;
            let end = ((c + 1) * DRAW_CHUNK).min(n_draws);
            let mut out = Vec::with_capacity(end - c * DRAW_CHUNK);
            for draw in &chain.mean_draws[c * DRAW_CHUNK..end] {
                let phi = &design * DVector::from_column_slice(draw);
                let phi = phi.as_slice();
                let beta = match mode {
                    XMode::Fixed => weighted_line(&x, phi, &uniform, spread_floor)
                        .ok_or_else(|| Error::Numerical("covariate has no spread".into()))?,
                    XMode::Random => {
                        let mut attempt = 0;
                        loop {
                            sample_dirichlet_flat(&mut sub, n, &mut weights);
                            if let Some(b) = weighted_line(&x, phi, &weights, spread_floor) {
                                break b;
                            }
                            rejected += 1;
                            attempt += 1;
                            if attempt >= MAX_REDRAWS {
                                return Err(Error::Numerical(
                                    "Bayesian-bootstrap weights repeatedly collapsed".into(),
                                ));
                            }
                        }
                    }
                };
                out.push(beta.to_vec());
            }
            Ok((out, rejected))
        })
        .collect();
    let chunks = chunks?;
    let rejected = chunks.iter().map(|(_, r)| r).sum();
    let draws: Vec<Vec<f64>> = chunks.into_iter().flat_map(|(d, _)| d).collect();
    let method = match mode {
        XMode::Random => Estimator::BayesSplineRandomX,
        XMode::Fixed => Estimator::BayesSplineFixedX,
    };
    PosteriorSummary::from_draws(method, &draws, rejected)
}

/// Settings for the end-to-end continuous-covariate fit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ContinuousConfig {
    pub knots: usize,
    /// Knot range; `None` uses the observed covariate range.
    pub range: Option<(f64, f64)>,
    pub mcmc: McmcConfig,
}

impl Default for ContinuousConfig {
    fn default() -> Self {
        Self {
            knots: 20,
            range: None,
            mcmc: McmcConfig::default(),
        }
    }
}

/// Builds the basis and runs the sampler on substream 0 of `rng`.
pub fn fit_spline_chain(
    data: &Dataset,
    config: &ContinuousConfig,
    rng: &RngStream,
) -> Result<SplineChain> {
    let x = scalar_covariate(data)?;
    let basis = match config.range {
        Some((lo, hi)) => crate::spline::build_basis_with_range(&x, config.knots, lo, hi)?,
        None => build_basis(&x, config.knots)?,
    };
    mcmc_fit(data, &basis, &config.mcmc, &mut rng.substream(0))
}
