//! O'Sullivan penalized-spline basis for a scalar covariate.
//!
//! `q` knots (two boundary plus `q − 2` interior, equally spaced) define a
//! cubic B-spline basis `B` with `q + 2` functions. The integrated squared
//! second-derivative penalty `Ω = ∫ B''B''ᵗ` has a two-dimensional null space
//! (the linear functions); its `q` positive eigen-directions are rescaled by
//! `d^{-1/2}` so that the penalty becomes an identity ridge on the spline
//! coefficients: `Z = B U diag(d)^{-1/2}`.
//!
//! Finally `Z` is made orthogonal to `[1, x]` on the training points. The
//! projection coefficients are stored so new points are mapped the same way;
//! with a vague prior on the linear terms this only reparametrizes the model,
//! but it decorrelates the linear and spline coefficients in the sampler.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{QrSolver, DEFAULT_CONDITION_LIMIT};

const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    /// Number of knots including the two boundary knots; also the number of
    /// columns of `z`. Zero means no spline terms.
    pub n_knots: usize,
    pub lower: f64,
    pub upper: f64,
    /// Full clamped knot sequence (boundary knots repeated `DEGREE + 1` times).
    knot_sequence: Vec<f64>,
    /// `(q + 2) × q` map from B-spline values to penalized coordinates.
    transform: DMatrix<f64>,
    /// `2 × q` projection of the raw columns on `[1, x]`.
    linear_part: DMatrix<f64>,
    /// Training covariate.
    pub x: Vec<f64>,
    /// `n × q` penalized spline design at the training points.
    pub z: DMatrix<f64>,
}

/// Knots spread uniformly over the observed range of `x`.
pub fn build_basis(x: &[f64], n_knots: usize) -> Result<BasisSpec> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    build_basis_with_range(x, n_knots, lo, hi)
}

/// Knots spread uniformly over `[lower, upper]`, which must cover `x`.
pub fn build_basis_with_range(
    x: &[f64],
    n_knots: usize,
    lower: f64,
    upper: f64,
) -> Result<BasisSpec> {
    let n = x.len();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite covariate value".into()));
    }
    if !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::InvalidInput(format!(
            "degenerate covariate range [{lower}, {upper}]"
        )));
    }
    let (xmin, xmax) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !(xmax > xmin) {
        return Err(Error::InvalidInput("covariate has zero range".into()));
    }
    if xmin < lower || xmax > upper {
        return Err(Error::InvalidInput(format!(
            "covariate range [{xmin}, {xmax}] exceeds knot range [{lower}, {upper}]"
        )));
    }
    if n_knots == 1 {
        return Err(Error::InvalidParameter(
            "a spline needs at least 2 knots (or 0 for none)".into(),
        ));
    }
    if n < n_knots + 4 {
        return Err(Error::InvalidInput(format!(
            "{n} observations are too few for {n_knots} knots"
        )));
    }

    let linear = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    if n_knots == 0 {
        return Ok(BasisSpec {
            n_knots,
            lower,
            upper,
            knot_sequence: Vec::new(),
            transform: DMatrix::zeros(0, 0),
            linear_part: DMatrix::zeros(2, 0),
            x: x.to_vec(),
            z: DMatrix::zeros(n, 0),
        });
    }

    let knot_sequence = clamped_knots(lower, upper, n_knots);
    let omega = penalty_matrix(&knot_sequence);
    let transform = penalty_transform(&omega, n_knots)?;

    let raw = raw_design(&knot_sequence, &transform, x, lower, upper);
    let names = vec!["(Intercept)".to_string(), "x".to_string()];
    let qr = QrSolver::new(&linear, &names, DEFAULT_CONDITION_LIMIT)?;
    let mut linear_part = DMatrix::zeros(2, n_knots);
    for q in 0..n_knots {
        let col: DVector<f64> = raw.column(q).into_owned();
        linear_part.set_column(q, &qr.solve(&col));
    }
    let z = raw - &linear * &linear_part;
    Ok(BasisSpec {
        n_knots,
        lower,
        upper,
        knot_sequence,
        transform,
        linear_part,
        x: x.to_vec(),
        z,
    })
}

impl BasisSpec {
    /// Spline design at arbitrary points. Points outside the knot range are
    /// clamped for the spline part.
    pub fn eval(&self, points: &[f64]) -> DMatrix<f64> {
        if self.n_knots == 0 {
            return DMatrix::zeros(points.len(), 0);
        }
        let raw = raw_design(
            &self.knot_sequence,
            &self.transform,
            points,
            self.lower,
            self.upper,
        );
        let linear = DMatrix::from_fn(points.len(), 2, |i, j| if j == 0 { 1.0 } else { points[i] });
        raw - linear * &self.linear_part
    }

    /// `[1, x, Z]` at arbitrary points.
    pub fn full_design_at(&self, points: &[f64]) -> DMatrix<f64> {
        let z = self.eval(points);
        full_design(points, &z)
    }

    /// `[1, x, Z]` at the training points.
    pub fn full_design(&self) -> DMatrix<f64> {
        full_design(&self.x, &self.z)
    }

    pub fn n_coefficients(&self) -> usize {
        self.n_knots + 2
    }
}

fn full_design(x: &[f64], z: &DMatrix<f64>) -> DMatrix<f64> {
    let q = z.ncols();
    DMatrix::from_fn(x.len(), q + 2, |i, j| match j {
        0 => 1.0,
        1 => x[i],
        _ => z[(i, j - 2)],
    })
}

fn clamped_knots(lower: f64, upper: f64, n_knots: usize) -> Vec<f64> {
    let mut t = vec![lower; DEGREE];
    for k in 0..n_knots {
        t.push(lower + (upper - lower) * k as f64 / (n_knots - 1) as f64);
    }
    // exact endpoint regardless of rounding
    *t.last_mut().unwrap() = upper;
    t.extend(std::iter::repeat_n(upper, DEGREE));
    t
}

/// Values (or `deriv`-th derivatives, 0 ≤ deriv ≤ 2) of every cubic B-spline
/// at `x`, by the Cox–de Boor recursion.
fn bspline_row(t: &[f64], x: f64, deriv: usize) -> Vec<f64> {
    let n_intervals = t.len() - 1;
    let upper = t[t.len() - 1];
    let mut basis: Vec<f64> = (0..n_intervals)
        .map(|i| {
            let inside = if x == upper {
                // right endpoint belongs to the last non-empty interval
                t[i] < t[i + 1] && t[i + 1] == upper
            } else {
                t[i] <= x && x < t[i + 1]
            };
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    for p in 1..=DEGREE {
        let derive = p > DEGREE - deriv;
        let next: Vec<f64> = (0..n_intervals - p)
            .map(|i| {
                if derive {
                    p as f64
                        * (ratio(basis[i], t[i + p] - t[i])
                            - ratio(basis[i + 1], t[i + p + 1] - t[i + 1]))
                } else {
                    ratio((x - t[i]) * basis[i], t[i + p] - t[i])
                        + ratio((t[i + p + 1] - x) * basis[i + 1], t[i + p + 1] - t[i + 1])
                }
            })
            .collect();
        basis = next;
    }
    basis
}

/// `Ω_ij = ∫ B_i''(x) B_j''(x) dx`; `B''` is linear on each knot interval so
/// Simpson's rule per interval is exact.
fn penalty_matrix(t: &[f64]) -> DMatrix<f64> {
    let n_basis = t.len() - DEGREE - 1;
    let mut omega = DMatrix::zeros(n_basis, n_basis);
    let breaks: Vec<f64> = {
        let mut b: Vec<f64> = t.to_vec();
        b.dedup();
        b
    };
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        let mid = 0.5 * (a + b);
        // B'' is continuous across simple interior knots, so the shared
        // endpoints may be evaluated from either side
        let nodes = [(a, 1.0), (mid, 4.0), (b, 1.0)];
        for (x, weight) in nodes {
            let d2 = bspline_row(t, x, 2);
            for i in 0..n_basis {
                if d2[i] == 0.0 {
                    continue;
                }
                for j in 0..n_basis {
                    omega[(i, j)] += weight * h / 6.0 * d2[i] * d2[j];
                }
            }
        }
    }
    crate::linalg::symmetrize(&omega)
}

fn penalty_transform(omega: &DMatrix<f64>, n_knots: usize) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(omega.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    let mut transform = DMatrix::zeros(omega.nrows(), n_knots);
    for (col, &k) in order.iter().take(n_knots).enumerate() {
        let d = eig.eigenvalues[k];
        if !(d > 1e-10 * largest) {
            return Err(Error::Numerical(format!(
                "penalty eigenvalue {col} is {d:e}; expected {n_knots} positive eigenvalues"
            )));
        }
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        // eigenvector sign is arbitrary; pin it to a positive largest entry
        let pivot = v
            .iter()
            .copied()
            .fold(0.0_f64, |acc, e| if e.abs() > acc.abs() { e } else { acc });
        if pivot < 0.0 {
            v.neg_mut();
        }
        transform.set_column(col, &(v / d.sqrt()));
    }
    Ok(transform)
}

fn raw_design(
    t: &[f64],
    transform: &DMatrix<f64>,
    x: &[f64],
    lower: f64,
    upper: f64,
) -> DMatrix<f64> {
    let n_basis = transform.nrows();
    let mut b = DMatrix::zeros(x.len(), n_basis);
    for (i, &xi) in x.iter().enumerate() {
        let row = bspline_row(t, xi.clamp(lower, upper), 0);
        for (j, v) in row.into_iter().enumerate() {
            b[(i, j)] = v;
        }
    }
    b * transform
}
