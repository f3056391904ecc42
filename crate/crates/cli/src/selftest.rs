//! The `selftest` command: exact checks on a two-group dataset.

use robreg::{
    cov_model_based, cov_sandwich_fixed_groups, cov_sandwich_hc0, fit_ols,
    posterior_beta_fixed_x_closed, posterior_beta_random_x, Dataset, GroupedData, RngStream,
};

use crate::error::CliResult;

pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance * self.expected.abs().max(1.0)
    }
}

/// x = 0 four times with y = 1..4, x = 1 four times with y = 3, 5, 7, 9.
pub fn two_group_dataset() -> Dataset {
    Dataset::with_intercept(
        &[("x", &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0])],
        &[1.0, 2.0, 3.0, 4.0, 3.0, 5.0, 7.0, 9.0],
    )
    .expect("static dataset is valid")
}

pub fn run_checks() -> CliResult<Vec<Check>> {
    let data = two_group_dataset();
    let beta = fit_ols(&data)?;
    let mb = cov_model_based(&data, &beta)?;
    let hc0 = cov_sandwich_hc0(&data, &beta)?;
    let grouped = GroupedData::from_dataset(&data)?;
    let groups = cov_sandwich_fixed_groups(&grouped)?;
    let fixed = posterior_beta_fixed_x_closed(&grouped)?;
    let random = posterior_beta_random_x(&grouped, 20_000, &mut RngStream::new(1, 0))?;
    let exact = 1e-10;
    let check = |name, value, expected, tolerance| Check {
        name,
        value,
        expected,
        tolerance,
    };
    Ok(vec![
        check("OLS intercept", beta[0], 2.5, exact),
        check("OLS slope", beta[1], 3.5, exact),
        check(
            "model-based slope SE",
            mb[(1, 1)].sqrt(),
            (25.0f64 / 12.0).sqrt(),
            exact,
        ),
        check("HC0 intercept variance", hc0[(0, 0)], 0.3125, exact),
        check("HC0 covariance", hc0[(0, 1)], -0.3125, exact),
        check("HC0 slope variance", hc0[(1, 1)], 1.5625, exact),
        check("fixed-X slope SD", fixed.sd[1], 2.5, exact),
        check("fixed-X intercept SD", fixed.sd[0], 1.25f64.sqrt(), exact),
        check(
            "fixed-groups sandwich slope variance",
            groups[(1, 1)],
            6.25,
            exact,
        ),
        check(
            "random-X posterior mean slope",
            random.beta_hat[1],
            3.5,
            0.05,
        ),
    ])
}
