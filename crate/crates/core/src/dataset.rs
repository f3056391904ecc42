use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(Intercept)";

/// Design matrix plus outcome vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub column_names: Vec<String>,
}

impl Dataset {
    /// Validates shape and finiteness. Rank is checked by the solvers.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, m) = x.shape();
        if y.len() != n {
            return Err(Error::InvalidInput(format!(
                "outcome has {} entries but design has {n} rows",
                y.len()
            )));
        }
        if column_names.len() != m {
            return Err(Error::InvalidInput(format!(
                "{} column names for {m} columns",
                column_names.len()
            )));
        }
        if m == 0 {
            return Err(Error::InvalidInput("design has no columns".into()));
        }
        if n < m {
            return Err(Error::InvalidInput(format!(
                "n = {n} is smaller than m = {m}"
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in data".into()));
        }
        Ok(Self { x, y, column_names })
    }

    /// Builds a dataset with an intercept column followed by `covariates`
    /// (each of length n).
    pub fn with_intercept(covariates: &[(&str, &[f64])], y: &[f64]) -> Result<Self> {
        let n = y.len();
        let m = covariates.len() + 1;
        if let Some((name, c)) = covariates.iter().find(|(_, c)| c.len() != n) {
            return Err(Error::InvalidInput(format!(
                "covariate {name} has {} entries, expected {n}",
                c.len()
            )));
        }
        let x = DMatrix::from_fn(
            n,
            m,
            |i, j| if j == 0 { 1.0 } else { covariates[j - 1].1[i] },
        );
        let mut names = vec![INTERCEPT.to_string()];
        names.extend(covariates.iter().map(|(name, _)| name.to_string()));
        Self::new(x, DVector::from_column_slice(y), names)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    /// Rounds every non-intercept covariate to `decimals` places so that
    /// values recorded with floating jitter group together.
    pub fn round_covariates(&self, decimals: u32) -> Dataset {
        let scale = 10f64.powi(decimals as i32);
        let mut x = self.x.clone();
        for (j, name) in self.column_names.iter().enumerate() {
            if name == INTERCEPT {
                continue;
            }
            for v in x.column_mut(j).iter_mut() {
                *v = (*v * scale).round() / scale;
            }
        }
        Dataset {
            x,
            y: self.y.clone(),
            column_names: self.column_names.clone(),
        }
    }
}
