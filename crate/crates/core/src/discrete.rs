//! Bayesian robust regression for discrete covariates.
//!
//! The covariate distribution is a Dirichlet over the observed atoms ξ_k
//! (posterior Dirichlet(n_1, …, n_K) under the improper `Π λ_k⁻¹` prior) and
//! each group mean φ_k has an independent posterior Student-t under the
//! `p(φ_k, σ_k²) ∝ σ_k⁻²` prior. The β functional is the λ-weighted least
//! squares fit of φ on ξ.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{weighted_least_squares, QrSolver, DEFAULT_CONDITION_LIMIT};
use crate::stochastics::{sample_dirichlet_counts, std_t, RngStream};
use crate::summary::{sd_from_variances, Estimator, PosteriorSummary};

/// Smallest group size with a finite posterior variance for φ_k.
pub const MIN_GROUP_SIZE: u64 = 4;

/// Default Monte Carlo draws for posterior summaries.
pub const DEFAULT_DRAWS: usize = 4000;

const DRAW_CHUNK: usize = 512;

/// Sufficient statistics of a dataset grouped by unique covariate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedData {
    /// K×m unique covariate rows, in order of first appearance.
    pub xi: DMatrix<f64>,
    pub counts: Vec<u64>,
    pub group_mean: Vec<f64>,
    /// Σ (Y_l − ȳ_k)² within each group.
    pub group_ss: Vec<f64>,
    /// Group index of every (retained) original row.
    pub row_index: Vec<usize>,
    pub column_names: Vec<String>,
}

/// A group removed by [`GroupedData::drop_small_groups`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedGroup {
    pub label: String,
    pub count: u64,
}

fn row_key(x: &DMatrix<f64>, i: usize) -> Vec<u64> {
    // -0.0 and 0.0 are the same covariate value
    x.row(i)
        .iter()
        .map(|v| if *v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

impl GroupedData {
    /// Groups rows by exact (bitwise) equality of the covariate row.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        let (n, m) = (data.n(), data.m());
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut first_rows = Vec::new();
        let mut row_index = Vec::with_capacity(n);
        for i in 0..n {
            let next = first_rows.len();
            let k = *index.entry(row_key(&data.x, i)).or_insert_with(|| {
                first_rows.push(i);
                next
            });
            row_index.push(k);
        }
        let k_groups = first_rows.len();
        let xi = DMatrix::from_fn(k_groups, m, |k, j| data.x[(first_rows[k], j)]);

        let mut counts = vec![0u64; k_groups];
        let mut sums = vec![0.0; k_groups];
        for (i, &k) in row_index.iter().enumerate() {
            counts[k] += 1;
            sums[k] += data.y[i];
        }
        let group_mean: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let mut group_ss = vec![0.0; k_groups];
        for (i, &k) in row_index.iter().enumerate() {
            let d = data.y[i] - group_mean[k];
            group_ss[k] += d * d;
        }
        let grouped = Self {
            xi,
            counts,
            group_mean,
            group_ss,
            row_index,
            column_names: data.column_names.clone(),
        };
        grouped.check_rank()?;
        Ok(grouped)
    }

    fn check_rank(&self) -> Result<()> {
        if self.xi.nrows() < self.xi.ncols() {
            return Err(Error::SingularDesign {
                condition: f64::INFINITY,
                columns: self.column_names.clone(),
            });
        }
        QrSolver::new(&self.xi, &self.column_names, DEFAULT_CONDITION_LIMIT).map(|_| ())
    }

    pub fn n_groups(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Human-readable covariate value of group `k`, intercept omitted.
    pub fn label(&self, k: usize) -> String {
        let parts: Vec<String> = self
            .column_names
            .iter()
            .enumerate()
            .filter(|(_, name)| name.as_str() != crate::dataset::INTERCEPT)
            .map(|(j, name)| format!("{name}={}", self.xi[(k, j)]))
            .collect();
        if parts.is_empty() {
            "(all rows)".into()
        } else {
            parts.join(", ")
        }
    }

    pub fn require_min_count(&self, min: u64) -> Result<()> {
        match self.counts.iter().position(|&c| c < min) {
            Some(k) => Err(Error::InsufficientReplication {
                group: k,
                label: self.label(k),
                count: self.counts[k] as usize,
                required: min as usize,
            }),
            None => Ok(()),
        }
    }

    /// Removes groups with fewer than `min` rows. This changes the estimand:
    /// the dropped covariate values no longer carry any weight.
    pub fn drop_small_groups(&self, min: u64) -> Result<(GroupedData, Vec<DroppedGroup>)> {
        let keep: Vec<usize> = (0..self.n_groups())
            .filter(|&k| self.counts[k] >= min)
            .collect();
        let dropped: Vec<DroppedGroup> = (0..self.n_groups())
            .filter(|&k| self.counts[k] < min)
            .map(|k| DroppedGroup {
                label: self.label(k),
                count: self.counts[k],
            })
            .collect();
        if keep.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no group has at least {min} rows"
            )));
        }
        let mut remap = vec![usize::MAX; self.n_groups()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let grouped = GroupedData {
            xi: self.xi.select_rows(&keep),
            counts: keep.iter().map(|&k| self.counts[k]).collect(),
            group_mean: keep.iter().map(|&k| self.group_mean[k]).collect(),
            group_ss: keep.iter().map(|&k| self.group_ss[k]).collect(),
            row_index: self
                .row_index
                .iter()
                .filter(|&&k| remap[k] != usize::MAX)
                .map(|&k| remap[k])
                .collect(),
            column_names: self.column_names.clone(),
        };
        grouped.check_rank()?;
        Ok((grouped, dropped))
    }

    /// Per-row design matrix reconstructed from the atoms.
    pub fn expanded_design(&self) -> DMatrix<f64> {
        let m = self.xi.ncols();
        DMatrix::from_fn(self.row_index.len(), m, |i, j| {
            self.xi[(self.row_index[i], j)]
        })
    }

    pub fn t_posteriors(&self) -> Vec<TPosterior> {
        (0..self.n_groups())
            .map(|k| TPosterior::from_group(self.counts[k], self.group_mean[k], self.group_ss[k]))
            .collect()
    }
}

/// Posterior Student-t for one group mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TPosterior {
    pub loc: f64,
    /// `s_k/√n_k` with `s_k² = SS_k/(n_k − 1)`; 0 for a group without spread.
    pub scale: f64,
    pub df: f64,
}

impl TPosterior {
    pub fn from_group(count: u64, mean: f64, ss: f64) -> Self {
        let n = count as f64;
        let df = n - 1.0;
        let scale = if ss > 0.0 && df > 0.0 {
            (ss / df / n).sqrt()
        } else {
            0.0
        };
        Self {
            loc: mean,
            scale,
            df,
        }
    }

    /// `scale²·df/(df − 2) = SS/(n(n − 3))`; infinite for df ≤ 2.
    pub fn variance(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else if self.df > 2.0 {
            self.scale * self.scale * self.df / (self.df - 2.0)
        } else {
            f64::INFINITY
        }
    }
}

/// One posterior draw of the covariate weights, Dirichlet(n_1, …, n_K).
pub fn draw_posterior_lambda(rng: &mut RngStream, grouped: &GroupedData) -> Result<Vec<f64>> {
    sample_dirichlet_counts(rng, &grouped.counts)
}

/// Independent posterior-t draws of the group means.
pub fn draw_posterior_phi(rng: &mut RngStream, tpost: &[TPosterior]) -> Result<Vec<f64>> {
    tpost
        .iter()
        .map(|t| {
            if !(t.df >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "t posterior df = {}",
                    t.df
                )));
            }
            Ok(if t.scale == 0.0 {
                t.loc
            } else {
                t.loc + t.scale * std_t(rng, t.df)
            })
        })
        .collect()
}

/// `argmin_α Σ λ_k (φ_k − ξ_k α)² = (ΞᵗWΞ)⁻¹ΞᵗWφ`.
pub fn beta_functional(phi: &[f64], lambda: &[f64], xi: &DMatrix<f64>) -> Result<DVector<f64>> {
    if phi.len() != xi.nrows() || lambda.len() != xi.nrows() {
        return Err(Error::InvalidInput(format!(
            "{} atoms but {} means and {} weights",
            xi.nrows(),
            phi.len(),
            lambda.len()
        )));
    }
    weighted_least_squares(
        xi,
        &DVector::from_column_slice(phi),
        lambda,
        DEFAULT_CONDITION_LIMIT,
    )
}

fn check_draws(n_draws: usize) -> Result<()> {
    if n_draws < 100 {
        return Err(Error::InvalidParameter(format!(
            "n_draws = {n_draws}; at least 100 required"
        )));
    }
    Ok(())
}

/// Runs `draw` over `n_draws` in fixed-size chunks, each chunk on its own
/// substream, and concatenates the results in chunk order.
pub(crate) fn chunked_draws<F>(rng: &RngStream, n_draws: usize, draw: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut RngStream) -> Result<Vec<f64>> + Sync,
{
    let n_chunks = n_draws.div_ceil(DRAW_CHUNK);
    let chunks: Result<Vec<Vec<Vec<f64>>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut sub = rng.substream(c as u64);
            let len = DRAW_CHUNK.min(n_draws - c * DRAW_CHUNK);
            (0..len).map(|_| draw(&mut sub)).collect()
        })
        .collect();
    Ok(chunks?.into_iter().flatten().collect())
}

/// Random-X posterior for β: joint draws of (λ, φ) pushed through the
/// weighted least-squares functional.
pub fn posterior_beta_random_x(
    grouped: &GroupedData,
    n_draws: usize,
    rng: &mut RngStream,
) -> Result<PosteriorSummary> {
    grouped.require_min_count(MIN_GROUP_SIZE)?;
    check_draws(n_draws)?;
    let tpost = grouped.t_posteriors();
    let draws = chunked_draws(rng, n_draws, |sub| {
        let lambda = draw_posterior_lambda(sub, grouped)?;
        let phi = draw_posterior_phi(sub, &tpost)?;
        Ok(beta_functional(&phi, &lambda, &grouped.xi)?
            .iter()
            .copied()
            .collect())
    })?;
    PosteriorSummary::from_draws(Estimator::BayesRandomX, &draws, 0)
}

/// `A = (ΞᵗWΞ)⁻¹ΞᵗW` for the empirical weights `W = diag(n_k/n)`.
fn empirical_projection(grouped: &GroupedData) -> Result<DMatrix<f64>> {
    let n = grouped.n() as f64;
    let sqrt_w: Vec<f64> = grouped
        .counts
        .iter()
        .map(|&c| (c as f64 / n).sqrt())
        .collect();
    let mut scaled = grouped.xi.clone();
    for (k, s) in sqrt_w.iter().enumerate() {
        scaled.row_mut(k).scale_mut(*s);
    }
    let qr = QrSolver::new(&scaled, &grouped.column_names, DEFAULT_CONDITION_LIMIT)?;
    let k_groups = grouped.n_groups();
    let mut a = DMatrix::zeros(grouped.xi.ncols(), k_groups);
    for k in 0..k_groups {
        let mut e = DVector::zeros(k_groups);
        e[k] = sqrt_w[k];
        a.set_column(k, &qr.solve(&e));
    }
    Ok(a)
}

/// Fixed-X posterior covariance `A·diag(Var φ_k)·Aᵗ`.
pub fn fixed_x_closed_covariance(grouped: &GroupedData) -> Result<DMatrix<f64>> {
    grouped.require_min_count(MIN_GROUP_SIZE)?;
    let a = empirical_projection(grouped)?;
    let var: Vec<f64> = grouped
        .t_posteriors()
        .iter()
        .map(TPosterior::variance)
        .collect();
    let mut a_scaled = a.clone();
    for (k, v) in var.iter().enumerate() {
        a_scaled.column_mut(k).scale_mut(*v);
    }
    Ok(crate::linalg::symmetrize(&(a_scaled * a.transpose())))
}

/// Exact fixed-X posterior: mean is the OLS fit, covariance from the
/// posterior-t variances.
pub fn posterior_beta_fixed_x_closed(grouped: &GroupedData) -> Result<PosteriorSummary> {
    let cov = fixed_x_closed_covariance(grouped)?;
    let a = empirical_projection(grouped)?;
    let beta = a * DVector::from_column_slice(&grouped.group_mean);
    let sd = sd_from_variances(cov.diagonal().iter().copied())?;
    Ok(PosteriorSummary::closed_form(
        Estimator::BayesFixedXClosed,
        beta.iter().copied().collect(),
        sd,
    ))
}

/// Monte Carlo version of the fixed-X posterior: λ held at the empirical
/// weights, only φ is drawn.
pub fn posterior_beta_fixed_x_mc(
    grouped: &GroupedData,
    n_draws: usize,
    rng: &mut RngStream,
) -> Result<PosteriorSummary> {
    grouped.require_min_count(MIN_GROUP_SIZE)?;
    check_draws(n_draws)?;
    let tpost = grouped.t_posteriors();
    let a = empirical_projection(grouped)?;
    let draws = chunked_draws(rng, n_draws, |sub| {
        let phi = DVector::from_vec(draw_posterior_phi(sub, &tpost)?);
        Ok((&a * phi).iter().copied().collect())
    })?;
    PosteriorSummary::from_draws(Estimator::BayesFixedXMc, &draws, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::two_groups;
    use approx::assert_relative_eq;

    #[test]
    fn two_groups_grouping() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        assert_eq!(g.n_groups(), 2);
        assert_eq!(g.counts, vec![4, 4]);
        assert_eq!(g.group_mean, vec![2.5, 6.0]);
        assert_eq!(g.group_ss, vec![5.0, 20.0]);
        assert_eq!(g.row_index, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn intercept_only_single_group() {
        let d = Dataset::new(
            DMatrix::from_element(5, 1, 1.0),
            DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            vec![crate::dataset::INTERCEPT.into()],
        )
        .unwrap();
        let g = GroupedData::from_dataset(&d).unwrap();
        assert_eq!(g.counts, vec![5]);
        let mut rng = RngStream::new(0, 0);
        assert_eq!(draw_posterior_lambda(&mut rng, &g).unwrap(), vec![1.0]);
    }

    #[test]
    fn distinct_rows_are_singletons() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let d = Dataset::with_intercept(&[("x", &x)], &[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]).unwrap();
        let g = GroupedData::from_dataset(&d).unwrap();
        assert_eq!(g.n_groups(), 6);
        assert!(g.group_ss.iter().all(|&s| s == 0.0));
        assert!(matches!(
            posterior_beta_fixed_x_closed(&g),
            Err(Error::InsufficientReplication { .. })
        ));
    }

    #[test]
    fn rank_deficient_atoms_rejected() {
        let d =
            Dataset::with_intercept(&[("x", &[1.0; 6])], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!(matches!(
            GroupedData::from_dataset(&d),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn drop_small_groups_keeps_rest() {
        let x = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0];
        let y = [1.0, 2.0, 3.0, 4.0, 2.0, 3.0, 5.0, 6.0, 7.0, 8.0];
        let g =
            GroupedData::from_dataset(&Dataset::with_intercept(&[("x", &x)], &y).unwrap()).unwrap();
        let (kept, dropped) = g.drop_small_groups(4).unwrap();
        assert_eq!(kept.counts, vec![4, 4]);
        assert_eq!(kept.row_index.len(), 8);
        assert_eq!(
            dropped,
            vec![DroppedGroup {
                label: "x=2".into(),
                count: 2
            }]
        );
    }

    #[test]
    fn t_variance_has_n_minus_three_divisor() {
        let t = TPosterior::from_group(4, 2.5, 5.0);
        assert_relative_eq!(t.variance(), 5.0 / (4.0 * 1.0), max_relative = 1e-14);
        assert_eq!(t.df, 3.0);
    }

    #[test]
    fn lambda_moments() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        let mut rng = RngStream::new(12, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| draw_posterior_lambda(&mut rng, &g).unwrap()[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((mean - 0.5).abs() < 0.005);
        let expected = 0.25 / 9.0;
        assert!((var - expected).abs() < 0.1 * expected, "var {var}");
    }

    #[test]
    fn phi_moments_and_point_mass() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        let tpost = g.t_posteriors();
        let mut rng = RngStream::new(13, 0);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| draw_posterior_phi(&mut rng, &tpost).unwrap())
            .collect();
        for (k, (mu, v)) in [(2.5, 1.25), (6.0, 5.0)].into_iter().enumerate() {
            let xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            if k == 0 {
                assert!((mean - mu).abs() < 0.02, "mean {mean}");
            }
            assert!((var - v).abs() < 0.1 * v, "group {k}: var {var}");
        }

        let flat = TPosterior::from_group(6, 3.25, 0.0);
        assert_eq!(draw_posterior_phi(&mut rng, &[flat]).unwrap(), vec![3.25]);
    }

    #[test]
    fn functional_is_exact_for_linear_means() {
        let xi = DMatrix::from_row_slice(4, 2, &[1.0, -1.0, 1.0, 0.5, 1.0, 2.0, 1.0, 3.0]);
        let alpha = DVector::from_vec(vec![0.75, -2.0]);
        let phi: Vec<f64> = (&xi * &alpha).iter().copied().collect();
        let b = beta_functional(&phi, &[0.1, 0.2, 0.3, 0.4], &xi).unwrap();
        assert_relative_eq!(b, alpha, epsilon = 1e-12);
    }

    #[test]
    fn functional_saturated_design_ignores_weights() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        for w in [[0.5, 0.5], [0.1, 0.9], [0.93, 0.07]] {
            let b = beta_functional(&[2.5, 6.0], &w, &g.xi).unwrap();
            assert_relative_eq!(b[0], 2.5, epsilon = 1e-12);
            assert_relative_eq!(b[1], 3.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn functional_invariant_to_weight_rescaling() {
        let xi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 3.0]);
        let phi = [1.0, 5.0, 2.0];
        let w = [0.2, 0.5, 0.3];
        let b = beta_functional(&phi, &w, &xi).unwrap();
        let w10: Vec<f64> = w.iter().map(|v| v * 10.0).collect();
        assert_relative_eq!(
            b,
            beta_functional(&phi, &w10, &xi).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn functional_rejects_collapsed_weights() {
        let xi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 3.0]);
        assert!(matches!(
            beta_functional(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.0], &xi),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn two_groups_fixed_closed() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        let s = posterior_beta_fixed_x_closed(&g).unwrap();
        assert_relative_eq!(s.beta_hat[0], 2.5, max_relative = 1e-12);
        assert_relative_eq!(s.beta_hat[1], 3.5, max_relative = 1e-12);
        assert_relative_eq!(s.sd[1], 2.5, max_relative = 1e-12);
        assert_relative_eq!(s.sd[0], 1.25f64.sqrt(), max_relative = 1e-12);
        assert_eq!(s.n_draws, 0);
    }

    fn noiseless_linear() -> GroupedData {
        let x: Vec<f64> = [0.0, 1.0, 2.0].iter().flat_map(|&v| [v; 5]).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 2.0 * v).collect();
        GroupedData::from_dataset(&Dataset::with_intercept(&[("x", &x)], &y).unwrap()).unwrap()
    }

    #[test]
    fn noiseless_linear_posteriors_are_point_masses() {
        let g = noiseless_linear();
        let mut rng = RngStream::new(1, 1);
        let closed = posterior_beta_fixed_x_closed(&g).unwrap();
        assert_eq!(closed.sd, vec![0.0, 0.0]);
        let mc = posterior_beta_fixed_x_mc(&g, 500, &mut rng).unwrap();
        assert!(mc.sd.iter().all(|&s| s < 1e-12));
        let rx = posterior_beta_random_x(&g, 500, &mut rng).unwrap();
        assert!(rx.sd.iter().all(|&s| s < 1e-12), "{:?}", rx.sd);
        assert_relative_eq!(rx.beta_hat[1], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn saturated_zero_spread_random_x() {
        // K = m, no within-group spread, φ non-linear cannot happen with two
        // atoms, so the functional is exact and sd = 0.
        let x = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let y = [2.0, 2.0, 2.0, 2.0, 7.0, 7.0, 7.0, 7.0];
        let g =
            GroupedData::from_dataset(&Dataset::with_intercept(&[("x", &x)], &y).unwrap()).unwrap();
        let mut rng = RngStream::new(2, 2);
        let s = posterior_beta_random_x(&g, 200, &mut rng).unwrap();
        assert_relative_eq!(s.beta_hat[1], 5.0, epsilon = 1e-12);
        assert!(s.sd[1] < 1e-12);
    }

    #[test]
    fn two_groups_random_x_mean() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        let mut rng = RngStream::new(2010, 0);
        let s = posterior_beta_random_x(&g, 100_000, &mut rng).unwrap();
        assert!((s.beta_hat[1] - 3.5).abs() < 0.03, "{:?}", s.beta_hat);
        assert_eq!(s.n_draws, 100_000);
    }

    #[test]
    fn two_groups_fixed_mc_converges_to_closed_form() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        let mut rng = RngStream::new(2011, 0);
        let s = posterior_beta_fixed_x_mc(&g, 100_000, &mut rng).unwrap();
        assert!((s.sd[1] - 2.5).abs() < 0.02 * 2.5, "{:?}", s.sd);
        let mc_se = s.sd[1] / (s.n_draws as f64).sqrt();
        assert!((s.beta_hat[1] - 3.5).abs() < 3.0 * mc_se);
    }

    #[test]
    fn draws_are_reproducible() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        let a = posterior_beta_random_x(&g, 3000, &mut RngStream::new(5, 9)).unwrap();
        let b = posterior_beta_random_x(&g, 3000, &mut RngStream::new(5, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_draws_rejected() {
        let g = GroupedData::from_dataset(&two_groups()).unwrap();
        assert!(posterior_beta_random_x(&g, 99, &mut RngStream::new(0, 0)).is_err());
    }
}
