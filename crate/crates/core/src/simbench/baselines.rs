//! Comparison estimators with their tuning parameters chosen on held-out data.

use ndarray::{Array1, Axis};

use crate::data::{center, mean_squared_error, predict, CoefficientVector, Dataset};
use crate::error::{Error, Result};
use crate::solvers::{fit_ols, fit_path_at, fit_path_gram, fit_ridge, Gram, PathOptions, PenaltySpec};
use crate::tuning::kfold_assignment;

/// L2 strengths tried for ridge pilots and elastic net.
pub const LAMBDA2_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Where held-out error comes from.
#[derive(Debug, Clone, Copy)]
pub enum Selector<'a> {
    Validation(&'a Dataset),
    /// Mean held-out MSE over `k` seeded folds of the training data.
    KFold { k: usize, seed: u64 },
}

impl Selector<'_> {
    fn check(&self, train: &Dataset) -> Result<()> {
        match *self {
            Selector::Validation(valid) if valid.p() != train.p() => {
                Err(Error::DimensionMismatch { expected: train.p(), got: valid.p() })
            }
            Selector::KFold { k, .. } if k < 2 || k > train.n() => {
                Err(Error::InvalidParameter(format!("k must lie in 2..={}, got {k}", train.n())))
            }
            _ => Ok(()),
        }
    }

    /// `(fit part, held-out part)` pairs.
    fn splits(&self, train: &Dataset) -> Result<Vec<(Dataset, Dataset)>> {
        let Selector::KFold { k, seed } = *self else {
            return Ok(Vec::new());
        };
        let folds = kfold_assignment(train.n(), k, seed);
        (0..k)
            .map(|f| {
                let kept: Vec<usize> = (0..train.n()).filter(|&i| folds[i] != f).collect();
                let held: Vec<usize> = (0..train.n()).filter(|&i| folds[i] == f).collect();
                Ok((train.select_rows(&kept)?, held_out(train, &held)))
            })
            .collect()
    }
}

/// Rows of `data`, allowing a single row (a [`Dataset`] needs two).
fn held_out(data: &Dataset, rows: &[usize]) -> Dataset {
    let x = data.x().select(Axis(0), rows);
    let y = data.y().select(Axis(0), rows);
    if rows.len() >= 2 {
        Dataset::new(x, y, None).expect("subset of a valid dataset")
    } else {
        // duplicate the lone row; its MSE is unchanged
        let x = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).expect("same width");
        let y = ndarray::concatenate(Axis(0), &[y.view(), y.view()]).expect("same length");
        Dataset::new(x, y, None).expect("subset of a valid dataset")
    }
}

#[derive(Debug, Clone)]
pub struct ValidatedFit {
    pub coefficients: CoefficientVector,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Held-out MSE at the chosen parameters (validation set or CV mean).
    pub valid_mse: f64,
}

fn score(coef: &CoefficientVector, valid: &Dataset) -> Result<f64> {
    Ok(mean_squared_error(predict(coef, valid.x())?.view(), valid.y()))
}

/// Penalized path on `train` at fixed `lambda2` and weights, keeping the lambda1 with the
/// lowest held-out MSE (ties to the larger lambda1).
pub fn validated_path(
    train: &Dataset,
    selector: &Selector<'_>,
    lambda2: f64,
    weights: Option<Array1<f64>>,
    scale: bool,
) -> Result<ValidatedFit> {
    selector.check(train)?;
    let view = center(train, scale);
    let template = PenaltySpec::new(0.0, lambda2, weights)?;
    let gram = Gram::new(view.xc.view(), view.yc.view());
    let path = fit_path_gram(view.xc.view(), view.yc.view(), &gram, &template, &PathOptions::default())?;
    let scores: Vec<f64> = match selector {
        Selector::Validation(valid) => {
            path.fits.iter().map(|f| score(&view.to_original(f.beta.view()), valid)).collect::<Result<_>>()?
        }
        Selector::KFold { .. } => {
            let mut total = vec![0.0; path.len()];
            let splits = selector.splits(train)?;
            for (fit_part, held) in &splits {
                let fv = center(fit_part, scale);
                let fg = Gram::new(fv.xc.view(), fv.yc.view());
                let fold_path =
                    fit_path_at(fv.xc.view(), fv.yc.view(), &fg, &template, path.lambdas.clone(), PathOptions::default().cd);
                for (t, fit) in total.iter_mut().zip(&fold_path.fits) {
                    *t += score(&fv.to_original(fit.beta.view()), held)?;
                }
            }
            total.iter().map(|t| t / splits.len() as f64).collect()
        }
    };
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if best.is_none_or(|b| *s < scores[b]) {
            best = Some(i);
        }
    }
    let i = best.ok_or(Error::Saturated)?;
    Ok(ValidatedFit {
        coefficients: view.to_original(path.fits[i].beta.view()),
        lambda1: path.lambdas[i],
        lambda2,
        valid_mse: scores[i],
    })
}

/// Single penalized fit at given strengths, no tuning.
pub fn fixed(
    train: &Dataset,
    lambda1: f64,
    lambda2: f64,
    weights: Option<Array1<f64>>,
    scale: bool,
) -> Result<CoefficientVector> {
    let view = center(train, scale);
    let spec = PenaltySpec::new(lambda1, lambda2, weights)?;
    let fit = crate::solvers::fit_penalized(view.xc.view(), view.yc.view(), &spec)?;
    Ok(view.to_original(fit.beta.view()))
}

pub fn lasso(train: &Dataset, selector: &Selector<'_>, scale: bool) -> Result<ValidatedFit> {
    validated_path(train, selector, 0.0, None, scale)
}

/// Elastic net over [`LAMBDA2_GRID`] times the lambda1 path.
pub fn elastic_net(train: &Dataset, selector: &Selector<'_>, scale: bool) -> Result<ValidatedFit> {
    let mut best: Option<ValidatedFit> = None;
    for &lambda2 in &LAMBDA2_GRID {
        let fit = validated_path(train, selector, lambda2, None, scale)?;
        if best.as_ref().is_none_or(|b| fit.valid_mse < b.valid_mse) {
            best = Some(fit);
        }
    }
    best.ok_or(Error::Saturated)
}

/// Ridge with lambda2 chosen from [`LAMBDA2_GRID`].
pub fn ridge(train: &Dataset, selector: &Selector<'_>, scale: bool) -> Result<ValidatedFit> {
    selector.check(train)?;
    let splits = selector.splits(train)?;
    let view = center(train, scale);
    let mut best: Option<ValidatedFit> = None;
    for &lambda2 in &LAMBDA2_GRID {
        let coefficients = view.to_original(fit_ridge(view.xc.view(), view.yc.view(), lambda2)?.beta.view());
        let valid_mse = match selector {
            Selector::Validation(valid) => score(&coefficients, valid)?,
            Selector::KFold { .. } => {
                let mut total = 0.0;
                for (fit_part, held) in &splits {
                    let fv = center(fit_part, scale);
                    let b = fit_ridge(fv.xc.view(), fv.yc.view(), lambda2)?;
                    total += score(&fv.to_original(b.beta.view()), held)?;
                }
                total / splits.len() as f64
            }
        };
        if best.as_ref().is_none_or(|b| valid_mse < b.valid_mse) {
            best = Some(ValidatedFit { coefficients, lambda1: 0.0, lambda2, valid_mse });
        }
    }
    best.ok_or(Error::Saturated)
}

pub fn ols(train: &Dataset, scale: bool) -> Result<CoefficientVector> {
    let view = center(train, scale);
    let fit = fit_ols(view.xc.view(), view.yc.view())?;
    Ok(view.to_original(fit.beta.view()))
}

/// OLS when `p < n`, otherwise tuned ridge.
pub fn ols_or_ridge(train: &Dataset, selector: &Selector<'_>, scale: bool) -> Result<CoefficientVector> {
    if train.p() < train.n() {
        ols(train, scale)
    } else {
        Ok(ridge(train, selector, scale)?.coefficients)
    }
}

/// `w_j = 1/|pilot_j|^r` in the fitting units, floored so that zero pilots get a huge finite weight.
pub fn adaptive_weights(train: &Dataset, pilot: &CoefficientVector, exponent: f64, scale: bool) -> Array1<f64> {
    let pilot_centered = center(train, scale).to_centered(pilot.beta.view());
    let biggest = pilot_centered.iter().fold(0.0_f64, |m, b| m.max(b.abs()));
    let floor = (f64::EPSILON * biggest).max(f64::MIN_POSITIVE);
    pilot_centered.mapv(|b| 1.0 / b.abs().max(floor).powf(exponent))
}

/// Adaptive lasso whose pilot is OLS (`p < n`) or tuned ridge.
pub fn adaptive_lasso(train: &Dataset, selector: &Selector<'_>, exponent: f64, scale: bool) -> Result<ValidatedFit> {
    let pilot = ols_or_ridge(train, selector, scale)?;
    let weights = adaptive_weights(train, &pilot, exponent, scale);
    validated_path(train, selector, 0.0, Some(weights), scale)
}
