//! Metropolis-within-Gibbs sampler for the heteroscedastic spline model
//!
//! ```text
//! y_i ~ N(φ_i, σ_i²)
//! φ_i = α₀ + α₁x_i + Σ a_q Z_iq        a_q ~ N(0, σ_a²), α ~ N(0, 10⁶)
//! log σ_i = γ₀ + γ₁x_i + Σ b_q Z_iq    b_q ~ N(0, 0.1),  γ ~ N(0, 10⁶)
//! 1/σ_a² ~ Gamma(0.1, rate 0.1)
//! ```
//!
//! Each sweep draws the mean coefficients exactly from their Gaussian full
//! conditional, `1/σ_a²` from its gamma conditional, and the log-SD block
//! jointly by random-walk Metropolis. The random-walk covariance starts at the
//! inverse Fisher information of the log-SD model (`2ZᵗZ` plus prior
//! precision), is replaced by the empirical covariance of the burn-in draws,
//! and its scale is tuned toward the target acceptance rate. Everything is
//! frozen once burn-in ends.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::spline::BasisSpec;
use crate::stochastics::{gamma_unchecked, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplinePriors {
    /// Prior variance of the intercept and slope in both linear predictors.
    pub linear_var: f64,
    /// Prior variance of the log-SD spline coefficients `b_q`.
    pub log_sd_spline_var: f64,
    /// Gamma(shape, rate) prior on the mean-spline precision `1/σ_a²`.
    pub precision_shape: f64,
    pub precision_rate: f64,
}

impl Default for SplinePriors {
    fn default() -> Self {
        Self {
            linear_var: 1e6,
            log_sd_spline_var: 0.1,
            precision_shape: 0.1,
            precision_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total sweeps including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Metropolis updates of the log-SD block per sweep.
    pub log_sd_steps: usize,
    pub target_acceptance: f64,
    /// When false the log-SD model is a single constant γ₀.
    pub heteroscedastic: bool,
    pub priors: SplinePriors,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 6000,
            burn_in: 2000,
            thin: 1,
            log_sd_steps: 2,
            target_acceptance: 0.35,
            heteroscedastic: true,
            priors: SplinePriors::default(),
        }
    }
}

impl McmcConfig {
    pub fn retained(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be at least 1".into()));
        }
        if self.retained() == 0 {
            return Err(Error::InvalidParameter(format!(
                "{} iterations with {} burn-in retain no draws",
                self.iterations, self.burn_in
            )));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidParameter(
                "target acceptance must be in (0, 1)".into(),
            ));
        }
        let p = &self.priors;
        for (name, v) in [
            ("linear_var", p.linear_var),
            ("log_sd_spline_var", p.log_sd_spline_var),
            ("precision_shape", p.precision_shape),
            ("precision_rate", p.precision_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Retained posterior draws of the spline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineChain {
    pub basis: BasisSpec,
    pub heteroscedastic: bool,
    /// `(α₀, α₁, a₁..a_Q)` per retained draw.
    pub mean_draws: Vec<Vec<f64>>,
    /// `(γ₀, γ₁, b₁..b_Q)` per retained draw, or `(γ₀)` when homoscedastic.
    pub log_sd_draws: Vec<Vec<f64>>,
    pub sigma_a2: Vec<f64>,
    /// Unnormalized log posterior of each retained draw.
    pub log_post: Vec<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Post-burn-in acceptance rate of the log-SD Metropolis step.
    pub log_sd_acceptance: f64,
}

impl SplineChain {
    pub fn len(&self) -> usize {
        self.mean_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_draws.is_empty()
    }

    /// Posterior mean of φ at `points`.
    pub fn posterior_mean_curve(&self, points: &[f64]) -> Vec<f64> {
        let design = self.basis.full_design_at(points);
        let mut avg = DVector::zeros(design.ncols());
        for draw in &self.mean_draws {
            avg += DVector::from_column_slice(draw);
        }
        avg /= self.len() as f64;
        (design * avg).iter().copied().collect()
    }

    /// Posterior mean of log σ at `points`.
    pub fn posterior_mean_log_sd(&self, points: &[f64]) -> Vec<f64> {
        let design = if self.heteroscedastic {
            self.basis.full_design_at(points)
        } else {
            DMatrix::from_element(points.len(), 1, 1.0)
        };
        let mut avg = DVector::zeros(design.ncols());
        for draw in &self.log_sd_draws {
            avg += DVector::from_column_slice(draw);
        }
        avg /= self.len() as f64;
        (design * avg).iter().copied().collect()
    }

    /// Flat CSV of the retained draws, one row per draw.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let q = self.basis.n_knots;
        let mut header = vec!["draw".to_string(), "alpha0".into(), "alpha1".into()];
        header.extend((1..=q).map(|k| format!("a{k}")));
        header.push("gamma0".into());
        if self.heteroscedastic {
            header.push("gamma1".into());
            header.extend((1..=q).map(|k| format!("b{k}")));
        }
        header.push("sigma_a2".into());
        header.push("log_post".into());
        writeln!(out, "{}", header.join(","))?;
        for d in 0..self.len() {
            let mut fields = vec![d.to_string()];
            fields.extend(self.mean_draws[d].iter().map(|v| v.to_string()));
            fields.extend(self.log_sd_draws[d].iter().map(|v| v.to_string()));
            fields.push(self.sigma_a2[d].to_string());
            fields.push(self.log_post[d].to_string());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Extracts the scalar covariate of an intercept + one-covariate dataset.
pub fn scalar_covariate(data: &Dataset) -> Result<Vec<f64>> {
    if data.m() != 2 || data.x.column(0).iter().any(|&v| v != 1.0) {
        return Err(Error::InvalidInput(
            "spline model needs an intercept column followed by one covariate".into(),
        ));
    }
    Ok(data.x.column(1).iter().copied().collect())
}

struct LogSdTarget<'a> {
    design: &'a DMatrix<f64>,
    prior_precision: Vec<f64>,
}

impl LogSdTarget<'_> {
    fn log_lik(log_sd: &DVector<f64>, resid_sq: &[f64]) -> f64 {
        log_sd
            .iter()
            .zip(resid_sq)
            .map(|(l, r2)| -l - 0.5 * r2 * (-2.0 * l).exp())
            .sum()
    }

    fn log_prior(&self, eta: &DVector<f64>) -> f64 {
        -0.5 * eta
            .iter()
            .zip(&self.prior_precision)
            .map(|(e, p)| e * e * p)
            .sum::<f64>()
    }
}

/// Covariance of the random-walk proposal, stored as its Cholesky factor.
fn cholesky_factor(cov: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    cov.clone().cholesky().map(|c| c.l())
}

/// One exact draw of `(α₀, α₁, a)` given the current log σ and spline
/// precision. `z` is scratch space of at least `design.ncols()` entries.
pub(crate) fn draw_mean_block(
    design: &DMatrix<f64>,
    y: &[f64],
    log_sd: &DVector<f64>,
    linear_var: f64,
    precision_a: f64,
    z: &mut DVector<f64>,
    rng: &mut RngStream,
) -> Option<DVector<f64>> {
    let (n, p) = design.shape();
    let mut scaled = design.clone();
    let mut rhs_y = DVector::zeros(n);
    for i in 0..n {
        let s = (-log_sd[i]).exp();
        scaled.row_mut(i).scale_mut(s);
        rhs_y[i] = y[i] * s;
    }
    let mut prec = scaled.tr_mul(&scaled);
    let rhs = scaled.tr_mul(&rhs_y);
    for j in 0..p {
        prec[(j, j)] += if j < 2 { 1.0 / linear_var } else { precision_a };
    }
    let chol = prec.cholesky()?;
    let mean = chol.solve(&rhs);
    for j in 0..p {
        z[j] = rng.std_normal();
    }
    // Lᵗv = z gives v ~ N(0, P⁻¹)
    let noise = chol
        .l_dirty()
        .tr_solve_lower_triangular(&z.rows(0, p).into_owned())?;
    Some(mean + noise)
}

/// Runs the sampler. `basis` must have been built from this dataset's
/// covariate.
pub fn mcmc_fit(
    data: &Dataset,
    basis: &BasisSpec,
    config: &McmcConfig,
    rng: &mut RngStream,
) -> Result<SplineChain> {
    config.validate()?;
    let x = scalar_covariate(data)?;
    if x != basis.x {
        return Err(Error::InvalidInput(
            "basis was not built from this dataset's covariate".into(),
        ));
    }
    let y: Vec<f64> = data.y.iter().copied().collect();
    let n = y.len();
    let q = basis.n_knots;
    let design = basis.full_design();
    let p = design.ncols();
    let priors = config.priors;
    let sd_design = if config.heteroscedastic {
        design.clone()
    } else {
        DMatrix::from_element(n, 1, 1.0)
    };
    let d = sd_design.ncols();

    let mut sd_prior_precision = vec![1.0 / priors.linear_var; d];
    for v in sd_prior_precision.iter_mut().skip(2) {
        *v = 1.0 / priors.log_sd_spline_var;
    }
    let target = LogSdTarget {
        design: &sd_design,
        prior_precision: sd_prior_precision,
    };

    // start from the OLS residual scale
    let init_sd = {
        let lin = design.columns(0, 2).into_owned();
        let names = vec!["(Intercept)".into(), "x".into()];
        let qr =
            crate::linalg::QrSolver::new(&lin, &names, crate::linalg::DEFAULT_CONDITION_LIMIT)?;
        let yv = DVector::from_column_slice(&y);
        let resid = &yv - &lin * qr.solve(&yv);
        (resid.norm_squared() / (n as f64 - 2.0)).sqrt().max(1e-8)
    };
    let mut eta = DVector::zeros(d);
    eta[0] = init_sd.ln();
    let mut log_sd = &sd_design * &eta;
    let mut precision_a = 1.0;

    // Fisher information of the log-SD model: 2·DᵗD + prior precision
    let mut fisher = sd_design.tr_mul(&sd_design) * 2.0;
    for j in 0..d {
        fisher[(j, j)] += target.prior_precision[j];
    }
    let fisher_cov = fisher
        .try_inverse()
        .ok_or_else(|| Error::Numerical("log-SD information matrix is singular".into()))?;
    let fisher_cov = crate::linalg::symmetrize(&fisher_cov);
    let mut proposal_chol = cholesky_factor(&fisher_cov).ok_or_else(|| {
        Error::Numerical("log-SD proposal covariance not positive definite".into())
    })?;
    let mut log_scale = (2.38 / (d as f64).sqrt()).ln();

    let adapt_start = config.burn_in / 4;
    let adapt_points = [config.burn_in / 2, 3 * config.burn_in / 4];
    let mut welford_n = 0usize;
    let mut welford_mean = DVector::zeros(d);
    let mut welford_m2 = DMatrix::zeros(d, d);

    let retained = config.retained();
    let mut chain = SplineChain {
        basis: basis.clone(),
        heteroscedastic: config.heteroscedastic,
        mean_draws: Vec::with_capacity(retained),
        log_sd_draws: Vec::with_capacity(retained),
        sigma_a2: Vec::with_capacity(retained),
        log_post: Vec::with_capacity(retained),
        iterations: config.iterations,
        burn_in: config.burn_in,
        thin: config.thin,
        log_sd_acceptance: 0.0,
    };
    let mut accepted_after_burn = 0usize;
    let mut proposed_after_burn = 0usize;
    let mut mh_steps = 0usize;
    let mut resid_sq = vec![0.0; n];
    let mut z = DVector::zeros(p.max(d));

    for iter in 0..config.iterations {
        // mean block: exact Gaussian full conditional
        let theta = draw_mean_block(
            &design,
            &y,
            &log_sd,
            priors.linear_var,
            precision_a,
            &mut z,
            rng,
        )
        .ok_or_else(|| Error::Divergence {
            iteration: iter,
            reason: "mean-block precision lost positive definiteness".into(),
        })?;

        // spline precision: Gamma(shape + Q/2, rate + |a|²/2)
        let a_sq: f64 = theta.iter().skip(2).map(|v| v * v).sum();
        let shape = priors.precision_shape + 0.5 * q as f64;
        let rate = priors.precision_rate + 0.5 * a_sq;
        precision_a = gamma_unchecked(rng, shape) / rate;
        if !(precision_a > 0.0 && precision_a.is_finite()) {
            return Err(Error::Divergence {
                iteration: iter,
                reason: format!("spline precision {precision_a}"),
            });
        }

        // log-SD block: random-walk Metropolis
        let fitted = &design * &theta;
        for i in 0..n {
            let r = y[i] - fitted[i];
            resid_sq[i] = r * r;
        }
        let mut current = LogSdTarget::log_lik(&log_sd, &resid_sq) + target.log_prior(&eta);
        if !current.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                reason: "non-finite log-SD likelihood".into(),
            });
        }
        for _ in 0..config.log_sd_steps {
            for j in 0..d {
                z[j] = rng.std_normal();
            }
            let step = (&proposal_chol * z.rows(0, d)) * log_scale.exp();
            let delta = target.design * &step;
            let u = rng.uniform();
            let mut accept = false;
            // bounded steps: never move any log σ_i by more than 3 at once
            if delta.amax() <= 3.0 {
                let cand_eta = &eta + &step;
                let cand_log_sd = &log_sd + &delta;
                let cand =
                    LogSdTarget::log_lik(&cand_log_sd, &resid_sq) + target.log_prior(&cand_eta);
                if cand.is_finite() && u.ln() < cand - current {
                    eta = cand_eta;
                    log_sd = cand_log_sd;
                    current = cand;
                    accept = true;
                }
            }
            mh_steps += 1;
            if iter < config.burn_in {
                let gain = (mh_steps as f64).powf(-0.6);
                log_scale += gain * (f64::from(u8::from(accept)) - config.target_acceptance);
            } else {
                proposed_after_burn += 1;
                accepted_after_burn += usize::from(accept);
            }
        }

        if iter < config.burn_in {
            if iter >= adapt_start {
                welford_n += 1;
                let diff = &eta - &welford_mean;
                welford_mean += &diff / welford_n as f64;
                let diff2 = &eta - &welford_mean;
                welford_m2 += &diff * diff2.transpose();
            }
            if adapt_points.contains(&(iter + 1)) && welford_n > 10 * d {
                let empirical =
                    crate::linalg::symmetrize(&(&welford_m2 / (welford_n as f64 - 1.0)));
                let blended = empirical * 0.95 + &fisher_cov * 0.05;
                if let Some(l) = cholesky_factor(&blended) {
                    proposal_chol = l;
                    log_scale = (2.38 / (d as f64).sqrt()).ln();
                }
            }
        } else if (iter - config.burn_in + 1).is_multiple_of(config.thin) && chain.len() < retained
        {
            let a_part = theta.iter().skip(2).map(|v| v * v).sum::<f64>();
            let log_post = current
                - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
                - 0.5 * (theta[0] * theta[0] + theta[1] * theta[1]) / priors.linear_var
                - 0.5 * a_part * precision_a
                + 0.5 * q as f64 * precision_a.ln()
                + (priors.precision_shape - 1.0) * precision_a.ln()
                - priors.precision_rate * precision_a;
            chain.mean_draws.push(theta.iter().copied().collect());
            chain.log_sd_draws.push(eta.iter().copied().collect());
            chain.sigma_a2.push(1.0 / precision_a);
            chain.log_post.push(log_post);
        }
    }
    chain.log_sd_acceptance = if proposed_after_burn > 0 {
        accepted_after_burn as f64 / proposed_after_burn as f64
    } else {
        0.0
    };
    Ok(chain)
}

/// Split-chain potential scale reduction of a scalar trace.
pub fn split_rhat(trace: &[f64]) -> f64 {
    let half = trace.len() / 2;
    if half < 2 {
        return f64::NAN;
    }
    let halves = [&trace[..half], &trace[half..2 * half]];
    let stats: Vec<(f64, f64)> = halves
        .iter()
        .map(|h| {
            let m = h.iter().sum::<f64>() / half as f64;
            let v = h.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (half as f64 - 1.0);
            (m, v)
        })
        .collect();
    let grand = (stats[0].0 + stats[1].0) / 2.0;
    let between = half as f64 * stats.iter().map(|(m, _)| (m - grand).powi(2)).sum::<f64>();
    let within = (stats[0].1 + stats[1].1) / 2.0;
    if within == 0.0 {
        return 1.0;
    }
    let var_plus = (half as f64 - 1.0) / half as f64 * within + between / half as f64;
    (var_plus / within).sqrt()
}
