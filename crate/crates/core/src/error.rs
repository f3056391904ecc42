use thiserror::Error;

/// Errors raised by the estimators, samplers, and simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Design matrix is (numerically) rank deficient. `columns` names the
    /// columns involved in the near-dependence.
    #[error("singular design (condition number {condition:.3e}); offending columns: {}", columns.join(", "))]
    SingularDesign {
        condition: f64,
        columns: Vec<String>,
    },

    #[error("zero residual degrees of freedom (n = {n}, m = {m})")]
    ZeroDegreesOfFreedom { n: usize, m: usize },

    /// A covariate group has fewer than four observations.
    #[error("insufficient replication: group {group} ({label}) has {count} observations, at least {required} required")]
    InsufficientReplication {
        group: usize,
        label: String,
        count: usize,
        required: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("MCMC divergence at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error("simulation failed: {failed} of {total} replicate fits failed (limit 1%)")]
    TooManyFailures { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
