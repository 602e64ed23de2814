use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

fn quadratic_form(v: ArrayView1<'_, f64>, m: &Array2<f64>) -> Result<f64> {
    if m.nrows() != v.len() || m.ncols() != v.len() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: v.len() });
    }
    Ok(v.dot(&m.dot(&v)))
}

/// Signal-to-noise ratio `b' S b / sigma^2`.
pub fn snr(beta0: ArrayView1<'_, f64>, covariance: &Array2<f64>, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(quadratic_form(beta0, covariance)? / (sigma * sigma))
}

/// Relative model error `(b - b0)' S (b - b0) / sigma^2`.
pub fn rme(beta_hat: ArrayView1<'_, f64>, beta0: ArrayView1<'_, f64>, covariance: &Array2<f64>, sigma: f64) -> Result<f64> {
    if beta_hat.len() != beta0.len() {
        return Err(Error::DimensionMismatch { expected: beta0.len(), got: beta_hat.len() });
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    let d = &beta_hat - &beta0;
    // a PD form is nonnegative; clamp rounding below zero
    Ok((quadratic_form(d.view(), covariance)? / (sigma * sigma)).max(0.0))
}
