use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1, ArrayView2};

use super::coordinate::residual_sum_of_squares;
use super::{FitResult, PenaltySpec};
use crate::error::{Error, Result};

fn gram_system(xc: ArrayView2<'_, f64>, yc: ArrayView1<'_, f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (n, p) = xc.dim();
    if yc.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: yc.len() });
    }
    let g = xc.t().dot(&xc);
    let c = xc.t().dot(&yc);
    Ok((DMatrix::from_fn(p, p, |i, j| g[[i, j]]), DVector::from_iterator(p, c.iter().copied())))
}

fn finish(xc: ArrayView2<'_, f64>, yc: ArrayView1<'_, f64>, beta: DVector<f64>, lambda2: f64) -> FitResult {
    let beta = Array1::from_iter(beta.iter().copied());
    let rss = residual_sum_of_squares(xc, yc, beta.view());
    let spec = PenaltySpec { lambda1: 0.0, lambda2, weights: None };
    FitResult::from_beta(beta, rss, &spec, 0, true)
}

/// Solves `(xc'xc + lambda2 I) b = xc'yc`.
pub fn fit_ridge(xc: ArrayView2<'_, f64>, yc: ArrayView1<'_, f64>, lambda2: f64) -> Result<FitResult> {
    if !(lambda2 >= 0.0 && lambda2.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge lambda2 must be finite and >= 0, got {lambda2}")));
    }
    if lambda2 == 0.0 {
        return fit_ols(xc, yc);
    }
    let (mut g, c) = gram_system(xc, yc)?;
    for j in 0..g.nrows() {
        g[(j, j)] += lambda2;
    }
    let chol = g.cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(finish(xc, yc, chol.solve(&c), lambda2))
}

/// Ordinary least squares via the normal equations.
pub fn fit_ols(xc: ArrayView2<'_, f64>, yc: ArrayView1<'_, f64>) -> Result<FitResult> {
    let (n, p) = xc.dim();
    if p > n {
        return Err(Error::RankDeficient);
    }
    let (g, c) = gram_system(xc, yc)?;
    let max_diag = g.diagonal().iter().fold(0.0_f64, |m, v| m.max(*v));
    if max_diag <= 0.0 {
        return Err(Error::RankDeficient);
    }
    let chol = g.cholesky().ok_or(Error::RankDeficient)?;
    // squared pivots are the Schur complements; a tiny one means a near-dependent column
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if min_pivot <= 1e-12 * max_diag {
        return Err(Error::RankDeficient);
    }
    Ok(finish(xc, yc, chol.solve(&c), 0.0))
}

/// Per-column simple-regression slopes `x_j'y / x_j'x_j`; zero-variance columns give 0.
pub fn fit_univariate(xc: ArrayView2<'_, f64>, yc: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if xc.nrows() != yc.len() {
        return Err(Error::DimensionMismatch { expected: xc.nrows(), got: yc.len() });
    }
    Ok(xc
        .columns()
        .into_iter()
        .map(|col| {
            let ss = col.dot(&col);
            if ss > 0.0 {
                col.dot(&yc) / ss
            } else {
                0.0
            }
        })
        .collect())
}
