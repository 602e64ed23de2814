//! The random lasso two-step bootstrap ensemble.
//!
//! Step 1 fits a lasso on each of `b` bootstrap samples restricted to a
//! uniformly drawn subset of `q1` predictors; the absolute value of the
//! averaged coefficients is each predictor's importance. Step 2 repeats the
//! procedure on fresh bootstrap samples, drawing `q2` predictors with
//! probability proportional to importance and fitting either a lasso or an
//! adaptive lasso weighted by inverse importance. The final coefficients are
//! the step 2 average, and a predictor counts as selected when its averaged
//! coefficient exceeds the threshold `t_n` in magnitude.

mod sampling;

pub use sampling::{bootstrap_indices, sample_subset_uniform, sample_subset_weighted};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{center, center_arrays, CoefficientVector, Dataset};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain, Purpose};
use crate::solvers::{fit_path_gram, fit_penalized_with, gcv_select, CdOptions, FitResult, Gram, PathOptions, PenaltySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step2Estimator {
    Lasso,
    AdaptiveLasso,
}

/// How each bootstrap fit picks its L1 strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    GcvPerFit,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    OneOverN,
    Fixed(f64),
}

impl ThresholdRule {
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            ThresholdRule::OneOverN => 1.0 / n as f64,
            ThresholdRule::Fixed(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Bootstrap samples per step.
    pub b: usize,
    pub q1: usize,
    pub q2: usize,
    pub step2_estimator: Step2Estimator,
    pub lambda_rule: LambdaRule,
    pub adaptive_exponent: f64,
    pub seed: u64,
    pub threshold_rule: ThresholdRule,
    /// Top up step 2 subsets with zero-importance predictors when fewer than `q2` are positive.
    pub fill_zero_importance: bool,
    /// Scale each bootstrap sample's predictors to unit standard deviation before fitting.
    pub scale: bool,
    pub n_lambda: usize,
    pub lambda_min_ratio: Option<f64>,
}

impl EnsembleConfig {
    pub const DEFAULT_B: usize = 500;

    pub fn new(q1: usize, q2: usize) -> Self {
        Self {
            b: Self::DEFAULT_B,
            q1,
            q2,
            step2_estimator: Step2Estimator::AdaptiveLasso,
            lambda_rule: LambdaRule::GcvPerFit,
            adaptive_exponent: 1.0,
            seed: 0,
            threshold_rule: ThresholdRule::OneOverN,
            fill_zero_importance: false,
            scale: true,
            n_lambda: 100,
            lambda_min_ratio: None,
        }
    }

    /// Plain bootstrap-aggregated lasso: full subsets in both steps, lasso in step 2.
    pub fn bagged(p: usize) -> Self {
        Self { step2_estimator: Step2Estimator::Lasso, ..Self::new(p, p) }
    }

    pub fn with_q(&self, q1: usize, q2: usize) -> Self {
        Self { q1, q2, ..self.clone() }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.b == 0 {
            return Err(Error::InvalidParameter("bootstrap count b must be >= 1".into()));
        }
        for (name, q) in [("q1", self.q1), ("q2", self.q2)] {
            if q == 0 || q > p {
                return Err(Error::InvalidParameter(format!("{name} must lie in 1..={p}, got {q}")));
            }
        }
        if !(self.adaptive_exponent > 0.0 && self.adaptive_exponent.is_finite()) {
            return Err(Error::InvalidParameter("adaptive exponent must be positive".into()));
        }
        if let LambdaRule::Fixed(l) = self.lambda_rule {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed lambda must be >= 0, got {l}")));
            }
        }
        if let ThresholdRule::Fixed(t) = self.threshold_rule {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed threshold must be >= 0, got {t}")));
            }
        }
        if self.n_lambda < 2 {
            return Err(Error::InvalidParameter("n_lambda must be >= 2".into()));
        }
        Ok(())
    }

    fn path_options(&self, n_lambda: usize) -> PathOptions {
        PathOptions { n_lambda, lambda_min_ratio: self.lambda_min_ratio, cd: CdOptions::default() }
    }
}

/// Non-negative per-predictor importance from step 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector(Array1<f64>);

impl ImportanceVector {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("importance {j} must be finite and >= 0, got {}", values[j])));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.0.iter().filter(|v| **v > 0.0).count()
    }
}

/// Bootstrap fits that needed a retry, or failed even after it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepDiagnostics {
    pub retried: usize,
    pub failed: usize,
}

impl std::ops::Add for StepDiagnostics {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { retried: self.retried + rhs.retried, failed: self.failed + rhs.failed }
    }
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Average of the embedded bootstrap coefficient vectors, original scale.
    pub mean: Array1<f64>,
    pub diagnostics: StepDiagnostics,
}

#[derive(Debug, Clone)]
pub struct RandomLassoModel {
    pub coefficients: CoefficientVector,
    pub importance: ImportanceVector,
    pub selected: Vec<usize>,
    pub t_n: f64,
    pub config: EnsembleConfig,
    pub diagnostics: StepDiagnostics,
}

impl RandomLassoModel {
    pub fn beta(&self) -> ArrayView1<'_, f64> {
        self.coefficients.beta.view()
    }
}

fn gather(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, rows: &[usize], cols: &[usize]) -> (Array2<f64>, Array1<f64>) {
    let xs = Array2::from_shape_fn((rows.len(), cols.len()), |(i, k)| x[[rows[i], cols[k]]]);
    let ys = rows.iter().map(|&i| y[i]).collect();
    (xs, ys)
}

enum Penalty<'a> {
    Lasso,
    /// Inverse-importance weights; `importance` is indexed by original column.
    Adaptive { importance: ArrayView1<'a, f64>, exponent: f64 },
}

/// One bootstrap fit on `cols`, embedded into a length-`p` original-scale vector.
fn bootstrap_fit(
    data: &Dataset,
    rows: &[usize],
    cols: &[usize],
    penalty: &Penalty<'_>,
    cfg: &EnsembleConfig,
    diagnostics: &mut StepDiagnostics,
) -> Array1<f64> {
    let p = data.p();
    let mut embedded = Array1::zeros(p);
    let (xs, ys) = gather(data.x(), data.y(), rows, cols);
    let view = center_arrays(xs.view(), ys.view(), cfg.scale);
    let weights = match penalty {
        Penalty::Lasso => None,
        Penalty::Adaptive { importance, exponent } => {
            // importance expressed in the units the subset is fitted in
            let raw: Vec<f64> = cols
                .iter()
                .zip(view.x_scales.iter())
                .map(|(&j, s)| (importance[j] * s).powf(*exponent))
                .collect();
            let smallest = raw.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
            let floor = if smallest.is_finite() { smallest } else { 1.0 };
            Some(raw.iter().map(|&v| 1.0 / if v > 0.0 { v } else { floor }).collect::<Array1<f64>>())
        }
    };
    let template = match PenaltySpec::new(0.0, 0.0, weights) {
        Ok(t) => t,
        Err(_) => {
            diagnostics.failed += 1;
            return embedded;
        }
    };
    let gram = Gram::new(view.xc.view(), view.yc.view());
    let attempt = |n_lambda: usize| -> Option<FitResult> {
        match cfg.lambda_rule {
            LambdaRule::GcvPerFit => {
                let path = fit_path_gram(view.xc.view(), view.yc.view(), &gram, &template, &cfg.path_options(n_lambda)).ok()?;
                let (_, fit) = gcv_select(&path, view.n()).ok()?;
                fit.converged.then(|| fit.clone())
            }
            LambdaRule::Fixed(lambda) => {
                let spec = template.with_lambda1(lambda);
                let opts = CdOptions { max_sweeps: CdOptions::default().max_sweeps * n_lambda / cfg.n_lambda, ..CdOptions::default() };
                let fit = fit_penalized_with(view.xc.view(), view.yc.view(), &gram, &spec, None, opts);
                fit.converged.then_some(fit)
            }
        }
    };
    let fit = match attempt(cfg.n_lambda) {
        Some(f) => f,
        None => {
            diagnostics.retried += 1;
            match attempt(2 * cfg.n_lambda) {
                Some(f) => f,
                None => {
                    diagnostics.failed += 1;
                    return embedded;
                }
            }
        }
    };
    let back = view.to_original(fit.beta.view());
    for (k, &j) in cols.iter().enumerate() {
        embedded[j] = back.beta[k];
    }
    embedded
}

/// The `b` embedded bootstrap fits of one step, computed in parallel, in index order.
fn bootstrap_fits<F>(
    data: &Dataset,
    cfg: &EnsembleConfig,
    domain: Domain,
    penalty: &Penalty<'_>,
    subset: F,
) -> Vec<(Array1<f64>, StepDiagnostics)>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<Vec<usize>> + Sync,
{
    let n = data.n();
    (0..cfg.b)
        .into_par_iter()
        .map(|b| {
            let mut diagnostics = StepDiagnostics::default();
            let rows = bootstrap_indices(n, &mut stream(cfg.seed, domain, b as u64, Purpose::Rows));
            let embedded = match subset(&mut stream(cfg.seed, domain, b as u64, Purpose::Subset)) {
                Ok(cols) => bootstrap_fit(data, &rows, &cols, penalty, cfg, &mut diagnostics),
                Err(_) => {
                    diagnostics.failed += 1;
                    Array1::zeros(data.p())
                }
            };
            (embedded, diagnostics)
        })
        .collect()
}

/// Runs `b` bootstrap fits and averages them in index order.
fn run_step<F>(data: &Dataset, cfg: &EnsembleConfig, domain: Domain, penalty: &Penalty<'_>, subset: F) -> StepOutput
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<Vec<usize>> + Sync,
{
    let results = bootstrap_fits(data, cfg, domain, penalty, subset);
    let mut sum = Array1::zeros(data.p());
    let mut diagnostics = StepDiagnostics::default();
    for (v, d) in &results {
        sum += v;
        diagnostics = diagnostics + *d;
    }
    StepOutput { mean: sum / cfg.b as f64, diagnostics }
}

/// Step 1: importance from lasso fits on uniform `q1`-subsets.
pub fn step1(data: &Dataset, cfg: &EnsembleConfig) -> Result<StepOutput> {
    cfg.validate(data.p())?;
    let p = data.p();
    Ok(run_step(data, cfg, Domain::Step1, &Penalty::Lasso, |rng| sample_subset_uniform(p, cfg.q1, rng)))
}

pub fn step1_importance(data: &Dataset, cfg: &EnsembleConfig) -> Result<ImportanceVector> {
    let out = step1(data, cfg)?;
    ImportanceVector::new(out.mean.mapv(f64::abs))
}

/// Step 2: averaged coefficients from fits on importance-weighted `q2`-subsets.
pub fn step2(data: &Dataset, importance: &ImportanceVector, cfg: &EnsembleConfig) -> Result<StepOutput> {
    cfg.validate(data.p())?;
    if importance.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), got: importance.len() });
    }
    if importance.positive_count() == 0 {
        return Err(Error::InvalidParameter("step 2 needs at least one positive importance".into()));
    }
    let weights = importance.values().to_vec();
    let penalty = match cfg.step2_estimator {
        Step2Estimator::Lasso => Penalty::Lasso,
        Step2Estimator::AdaptiveLasso => {
            Penalty::Adaptive { importance: importance.values(), exponent: cfg.adaptive_exponent }
        }
    };
    Ok(run_step(data, cfg, Domain::Step2, &penalty, |rng| {
        sample_subset_weighted(&weights, cfg.q2, cfg.fill_zero_importance, rng)
    }))
}

pub fn step2_estimate(data: &Dataset, importance: &ImportanceVector, cfg: &EnsembleConfig) -> Result<Array1<f64>> {
    Ok(step2(data, importance, cfg)?.mean)
}

/// Assembles a model from step outputs; the intercept uses the full-sample means.
pub fn assemble_model(
    data: &Dataset,
    importance: ImportanceVector,
    step1_diagnostics: StepDiagnostics,
    step2: StepOutput,
    cfg: &EnsembleConfig,
) -> RandomLassoModel {
    let full = center(data, false);
    let beta = step2.mean;
    let intercept = full.y_mean - full.x_means.dot(&beta);
    let t_n = cfg.threshold_rule.resolve(data.n());
    let selected = beta.iter().enumerate().filter(|(_, b)| b.abs() > t_n).map(|(j, _)| j).collect();
    RandomLassoModel {
        coefficients: CoefficientVector { beta, intercept },
        importance,
        selected,
        t_n,
        config: cfg.clone(),
        diagnostics: step1_diagnostics + step2.diagnostics,
    }
}

pub fn fit_random_lasso(data: &Dataset, cfg: &EnsembleConfig) -> Result<RandomLassoModel> {
    let s1 = step1(data, cfg)?;
    let importance = ImportanceVector::new(s1.mean.mapv(f64::abs))?;
    let s2 = step2(data, &importance, cfg)?;
    Ok(assemble_model(data, importance, s1.diagnostics, s2, cfg))
}
