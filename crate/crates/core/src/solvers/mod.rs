//! Penalized least-squares solvers.
//!
//! Every solver works on centered data and minimizes the un-normalized
//! criterion
//!
//! ```text
//! sum_i (y_i - x_i'b)^2 + lambda1 * sum_j w_j |b_j| + lambda2 * sum_j b_j^2
//! ```
//!
//! so reported lambda values are on that scale (no `1/2n` factor).

mod closed_form;
mod coordinate;
mod path;

pub use closed_form::{fit_ols, fit_ridge, fit_univariate};
pub use coordinate::{fit_penalized, fit_penalized_with, kkt_violation, residual_sum_of_squares, CdOptions, Gram};
pub use path::{
    fit_path, fit_path_at, fit_path_gram, gcv_score, gcv_select, lambda_grid, lambda_max, GcvChoice, LambdaPath, PathOptions,
};

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// L1/L2 penalty strengths with optional per-coefficient L1 weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub weights: Option<Array1<f64>>,
}

impl PenaltySpec {
    pub fn new(lambda1: f64, lambda2: f64, weights: Option<Array1<f64>>) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda1.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda1 must be finite and >= 0, got {lambda1}")));
        }
        if !(lambda2 >= 0.0 && lambda2.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda2 must be finite and >= 0, got {lambda2}")));
        }
        if let Some(w) = &weights {
            if let Some(j) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "penalty weight {j} must be finite and > 0, got {}",
                    w[j]
                )));
            }
        }
        Ok(Self { lambda1, lambda2, weights })
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0, None)
    }

    pub fn elastic_net(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(lambda1, lambda2, None)
    }

    pub fn adaptive(lambda: f64, weights: Array1<f64>) -> Result<Self> {
        Self::new(lambda, 0.0, Some(weights))
    }

    pub fn with_lambda1(&self, lambda1: f64) -> Self {
        Self { lambda1, ..self.clone() }
    }

    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// The penalty term evaluated at `beta`.
    pub fn penalty(&self, beta: ArrayView1<'_, f64>) -> f64 {
        let l1: f64 = beta.iter().enumerate().map(|(j, b)| self.weight(j) * b.abs()).sum();
        let l2: f64 = beta.iter().map(|b| b * b).sum();
        self.lambda1 * l1 + self.lambda2 * l2
    }
}

/// Outcome of a single penalized fit, in centered coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Array1<f64>,
    pub objective: f64,
    pub rss: f64,
    pub df: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub(crate) fn from_beta(beta: Array1<f64>, rss: f64, spec: &PenaltySpec, iterations: usize, converged: bool) -> Self {
        let objective = rss + spec.penalty(beta.view());
        let df = beta.iter().filter(|b| **b != 0.0).count();
        Self { beta, objective, rss, df, iterations, converged }
    }
}

/// `sign(z) * max(|z| - gamma, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}
