//! Model-robust linear regression.
//!
//! The estimand is the least-squares linear approximation to the true mean
//! function, β = argmin_α ∫ (φ(x) − xα)² λ(x) dx, which stays meaningful when
//! the mean is nonlinear or the variance heteroscedastic. It is estimated by
//!
//! - ordinary least squares with model-based or HC0 sandwich covariance
//!   ([`classic`]),
//! - a Bayesian robust posterior for discrete covariates: Dirichlet weights on
//!   the observed atoms and posterior-t group means ([`discrete`]),
//! - the same functional for a continuous covariate, with O'Sullivan spline
//!   priors on the mean and log-SD and Bayesian-bootstrap covariate weights
//!   ([`spline`], [`mcmc`], [`continuous`]),
//!
//! each in a random-X and a fixed-X flavour. [`sim`] runs the coverage study.

pub mod classic;
pub mod continuous;
pub mod dataset;
pub mod discrete;
pub mod error;
pub mod linalg;
pub mod mcmc;
pub mod sim;
pub mod spline;
pub mod stochastics;
pub mod summary;

#[cfg(test)]
pub(crate) mod testutil;

pub use classic::{
    ci95, cov_model_based, cov_sandwich_fixed_groups, cov_sandwich_hc0, fit_classic, fit_ols,
    FitResult,
};
pub use continuous::{fit_spline_chain, posterior_beta_continuous, ContinuousConfig};
pub use dataset::{Dataset, INTERCEPT};
pub use discrete::{
    beta_functional, draw_posterior_lambda, draw_posterior_phi, fixed_x_closed_covariance,
    posterior_beta_fixed_x_closed, posterior_beta_fixed_x_mc, posterior_beta_random_x, GroupedData,
    TPosterior,
};
pub use error::{Error, Result};
pub use mcmc::{mcmc_fit, McmcConfig, SplineChain, SplinePriors};
pub use sim::{
    gen_dataset, run_study, true_beta, MeanShape, ScenarioSpec, SimMethod, SimulationReport,
    StudyConfig, VarianceShape,
};
pub use spline::{build_basis, build_basis_with_range, BasisSpec};
pub use stochastics::{
    sample_dirichlet_counts, sample_gamma, sample_normal, sample_student_t, RngStream,
};
pub use summary::{Estimator, PosteriorSummary, XMode};
