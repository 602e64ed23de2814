use ndarray::{Array1, ArrayView1, ArrayView2};

use super::coordinate::{fit_penalized_with, CdOptions, Gram};
use super::{FitResult, PenaltySpec};
use crate::error::{Error, Result};

/// Fits along a decreasing lambda1 grid; `lambdas[0]` is the smallest lambda1 giving the zero vector.
#[derive(Debug, Clone)]
pub struct LambdaPath {
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitResult>,
}

impl LambdaPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    pub n_lambda: usize,
    /// Defaults to 1e-3, or 1e-2 when `p >= n`.
    pub lambda_min_ratio: Option<f64>,
    pub cd: CdOptions,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { n_lambda: 100, lambda_min_ratio: None, cd: CdOptions::default() }
    }
}

impl PathOptions {
    pub fn min_ratio(&self, n: usize, p: usize) -> f64 {
        self.lambda_min_ratio.unwrap_or(if p >= n { 1e-2 } else { 1e-3 })
    }
}

/// `max_j |2 x_j'y / w_j|`.
pub fn lambda_max(xty: ArrayView1<'_, f64>, spec: &PenaltySpec) -> f64 {
    xty.iter()
        .enumerate()
        .map(|(j, c)| (2.0 * c / spec.weight(j)).abs())
        .fold(0.0, f64::max)
}

/// Geometric grid from `max` down to `ratio * max`.
pub fn lambda_grid(max: f64, n_lambda: usize, ratio: f64) -> Vec<f64> {
    let max = if max > 0.0 { max } else { f64::MIN_POSITIVE.sqrt() };
    if n_lambda == 1 {
        return vec![max];
    }
    let step = ratio.ln() / (n_lambda - 1) as f64;
    (0..n_lambda).map(|i| max * (step * i as f64).exp()).collect()
}

pub fn fit_path(
    xc: ArrayView2<'_, f64>,
    yc: ArrayView1<'_, f64>,
    spec_template: &PenaltySpec,
    n_lambda: usize,
    lambda_min_ratio: f64,
) -> Result<LambdaPath> {
    if xc.nrows() != yc.len() {
        return Err(Error::DimensionMismatch { expected: xc.nrows(), got: yc.len() });
    }
    let gram = Gram::new(xc, yc);
    let opts = PathOptions { n_lambda, lambda_min_ratio: Some(lambda_min_ratio), ..PathOptions::default() };
    fit_path_gram(xc, yc, &gram, spec_template, &opts)
}

/// Path fit with warm starts; `spec_template.lambda1` is ignored.
pub fn fit_path_gram(
    xc: ArrayView2<'_, f64>,
    yc: ArrayView1<'_, f64>,
    gram: &Gram,
    spec_template: &PenaltySpec,
    opts: &PathOptions,
) -> Result<LambdaPath> {
    if opts.n_lambda < 2 {
        return Err(Error::InvalidParameter(format!("n_lambda must be >= 2, got {}", opts.n_lambda)));
    }
    let (n, p) = xc.dim();
    if let Some(w) = &spec_template.weights {
        if w.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: w.len() });
        }
    }
    let ratio = opts.min_ratio(n, p);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda_min_ratio must lie in (0, 1), got {ratio}")));
    }
    let lambdas = lambda_grid(lambda_max(gram.xty.view(), spec_template), opts.n_lambda, ratio);
    Ok(fit_path_at(xc, yc, gram, spec_template, lambdas, opts.cd))
}

/// Warm-started fits at caller-supplied `lambdas`, in the given order.
pub fn fit_path_at(
    xc: ArrayView2<'_, f64>,
    yc: ArrayView1<'_, f64>,
    gram: &Gram,
    spec_template: &PenaltySpec,
    lambdas: Vec<f64>,
    cd: CdOptions,
) -> LambdaPath {
    let mut fits: Vec<FitResult> = Vec::with_capacity(lambdas.len());
    let mut warm = Array1::zeros(xc.ncols());
    for &lambda in &lambdas {
        let spec = spec_template.with_lambda1(lambda);
        let fit = fit_penalized_with(xc, yc, gram, &spec, Some(warm.view()), cd);
        warm.assign(&fit.beta);
        fits.push(fit);
    }
    LambdaPath { lambdas, fits }
}

/// `RSS / (n (1 - df/n)^2)`; `None` when `df >= n`.
pub fn gcv_score(rss: f64, df: usize, n: usize) -> Option<f64> {
    if df >= n {
        return None;
    }
    let shrink = 1.0 - df as f64 / n as f64;
    Some(rss / (n as f64 * shrink * shrink))
}

#[derive(Debug, Clone)]
pub struct GcvChoice {
    pub index: usize,
    pub lambda: f64,
    pub score: f64,
}

/// Path entry with the smallest GCV score; ties go to the larger lambda.
pub fn gcv_select(path: &LambdaPath, n: usize) -> Result<(GcvChoice, &FitResult)> {
    let mut best: Option<GcvChoice> = None;
    for (index, (fit, &lambda)) in path.fits.iter().zip(path.lambdas.iter()).enumerate() {
        let Some(score) = gcv_score(fit.rss, fit.df, n) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| score < b.score) {
            best = Some(GcvChoice { index, lambda, score });
        }
    }
    let choice = best.ok_or(Error::Saturated)?;
    let fit = &path.fits[choice.index];
    Ok((choice, fit))
}
