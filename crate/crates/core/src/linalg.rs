//! Small dense linear-algebra helpers on top of nalgebra.
//!
//! All least-squares solves go through a column-pivot-free Householder QR and
//! are gated on an estimate of the condition number of `R`, so collinear
//! designs fail loudly instead of returning garbage.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default condition-number gate for least-squares solves.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

/// Thin QR factorization of a tall matrix with a condition-number check.
pub struct QrSolver {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl QrSolver {
    /// Factor `x` (n×m, n ≥ m). `names` labels the columns for error reporting.
    pub fn new(x: &DMatrix<f64>, names: &[String], condition_limit: f64) -> Result<Self> {
        let (n, m) = x.shape();
        if n < m {
            return Err(Error::InvalidInput(format!(
                "design has {n} rows but {m} columns"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidInput("design has no columns".into()));
        }
        let qr = x.clone().qr();
        let r = qr.r();
        let q = qr.q();
        let condition = r_condition(x, &r);
        if !condition.is_finite() || condition > condition_limit {
            return Err(Error::SingularDesign {
                condition,
                columns: offending_columns(x, names),
            });
        }
        Ok(Self { q, r })
    }

    /// Least-squares solution of `x b ≈ y`.
    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let qty = self.q.tr_mul(y);
        self.r
            .solve_upper_triangular(&qty)
            .expect("R is nonsingular after the condition gate")
    }

    /// `(XᵗX)⁻¹ = R⁻¹R⁻ᵗ`.
    pub fn xtx_inverse(&self) -> DMatrix<f64> {
        let m = self.r.nrows();
        let r_inv = self
            .r
            .solve_upper_triangular(&DMatrix::identity(m, m))
            .expect("R is nonsingular after the condition gate");
        symmetrize(&(&r_inv * r_inv.transpose()))
    }
}

/// Condition number of `x` estimated from the column-equilibrated R factor.
///
/// Columns are scaled to unit norm first so that a badly scaled but
/// well-posed design (e.g. costs in dollars next to an intercept) is not
/// rejected.
fn r_condition(x: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    let m = x.ncols();
    let mut scaled = r.clone();
    for j in 0..m {
        let norm = x.column(j).norm();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        for i in 0..m {
            scaled[(i, j)] /= norm;
        }
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Names of the columns that participate in the smallest singular direction
/// of the equilibrated design.
fn offending_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let m = x.ncols();
    let mut scaled = x.clone();
    for j in 0..m {
        let norm = x.column(j).norm();
        if norm > 0.0 {
            scaled.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    let label = |j: usize| names.get(j).cloned().unwrap_or_else(|| format!("col{j}"));
    let zero_cols: Vec<String> = (0..m)
        .filter(|&j| x.column(j).norm() == 0.0)
        .map(label)
        .collect();
    if !zero_cols.is_empty() {
        return zero_cols;
    }
    let svd = scaled.svd(false, true);
    let v_t = match svd.v_t {
        Some(v) => v,
        None => return (0..m).map(label).collect(),
    };
    let (idx, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
            );
    let direction = v_t.row(idx);
    let biggest = direction.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    (0..m)
        .filter(|&j| direction[j].abs() > 0.1 * biggest)
        .map(label)
        .collect()
}

/// Weighted least squares `argmin Σ w_i (y_i − x_i b)²` via QR on the
/// √w-scaled design.
pub fn weighted_least_squares(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    weights: &[f64],
    condition_limit: f64,
) -> Result<DVector<f64>> {
    let n = x.nrows();
    debug_assert_eq!(weights.len(), n);
    let mut xs = x.clone();
    let mut ys = y.clone();
    for i in 0..n {
        let w = weights[i];
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!("weight {i} is {w}")));
        }
        let s = w.sqrt();
        xs.row_mut(i).scale_mut(s);
        ys[i] *= s;
    }
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("col{j}")).collect();
    let qr = QrSolver::new(&xs, &names, condition_limit)?;
    Ok(qr.solve(&ys))
}

/// `(A + Aᵗ)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// `Xᵗ diag(d) X` without forming the diagonal matrix.
pub fn xt_diag_x(x: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let (n, m) = x.shape();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..n {
        let di = d[i];
        if di == 0.0 {
            continue;
        }
        for a in 0..m {
            let xa = x[(i, a)] * di;
            if xa == 0.0 {
                continue;
            }
            for b in a..m {
                out[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            out[(a, b)] = out[(b, a)];
        }
    }
    out
}

/// Sandwich product `B M B` for symmetric bread `B`.
pub fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(bread * meat * bread))
}
