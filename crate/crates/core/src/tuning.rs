//! Choosing the ensemble subset sizes `(q1, q2)` by held-out prediction error.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::{mean_squared_error, predict, Dataset};
use crate::ensemble::{assemble_model, step1, step2, EnsembleConfig, ImportanceVector, RandomLassoModel};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain, Purpose};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuningGrid {
    pub q1_values: Vec<usize>,
    pub q2_values: Vec<usize>,
}

impl TuningGrid {
    pub fn new(q1_values: Vec<usize>, q2_values: Vec<usize>, p: usize) -> Result<Self> {
        for (name, values) in [("q1", &q1_values), ("q2", &q2_values)] {
            if values.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} grid is empty")));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!("{name} grid must be strictly ascending")));
            }
            if let Some(&q) = values.iter().find(|&&q| q == 0 || q > p) {
                return Err(Error::InvalidParameter(format!("{name} grid value {q} outside 1..={p}")));
            }
        }
        Ok(Self { q1_values, q2_values })
    }

    /// Same candidates for both steps.
    pub fn square(values: Vec<usize>, p: usize) -> Result<Self> {
        Self::new(values.clone(), values, p)
    }

    /// `{2,4,6,8}` for `p <= 10`, `{4,8,...,28}` for `p <= 60`, `{5,10,...,min(p,50)}` beyond;
    /// values above `p` are dropped.
    pub fn default_for(p: usize) -> Self {
        let raw: Vec<usize> = if p <= 10 {
            vec![2, 4, 6, 8]
        } else if p <= 60 {
            (1..=7).map(|k| 4 * k).collect()
        } else {
            (1..).map(|k| 5 * k).take_while(|&q| q <= p.min(50)).collect()
        };
        let mut values: Vec<usize> = raw.into_iter().filter(|&q| q <= p).collect();
        if values.is_empty() {
            values.push(p);
        }
        Self { q1_values: values.clone(), q2_values: values }
    }

    /// Every other candidate, starting with the first.
    pub fn halved(&self) -> Self {
        let half = |v: &[usize]| v.iter().step_by(2).copied().collect::<Vec<_>>();
        Self { q1_values: half(&self.q1_values), q2_values: half(&self.q2_values) }
    }

    pub fn cells(&self) -> usize {
        self.q1_values.len() * self.q2_values.len()
    }

    fn check(&self, p: usize) -> Result<()> {
        Self::new(self.q1_values.clone(), self.q2_values.clone(), p).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct TuningResult {
    pub best_q1: usize,
    pub best_q2: usize,
    pub grid: TuningGrid,
    /// Mean squared prediction error per `(q1, q2)` cell; `inf` marks infeasible cells.
    pub score_table: Array2<f64>,
    /// Per-fold tables for K-fold tuning; empty for validation-set tuning.
    pub fold_tables: Vec<Array2<f64>>,
    /// Model at the chosen cell, fitted on the full training data.
    pub model: RandomLassoModel,
}

/// Ensemble fits for every cell of a grid, indexed `[q1][q2]`.
#[derive(Debug, Clone)]
pub struct GridFits {
    pub grid: TuningGrid,
    pub models: Vec<Vec<Option<RandomLassoModel>>>,
}

/// Fits every grid cell on `train`.
///
/// All cells share `cfg_template.seed`, so step 1 depends only on `q1` and is
/// computed once per row of the grid.
pub fn fit_grid(train: &Dataset, grid: &TuningGrid, cfg_template: &EnsembleConfig) -> Result<GridFits> {
    grid.check(train.p())?;
    let models = grid
        .q1_values
        .par_iter()
        .map(|&q1| {
            let row_cfg = cfg_template.with_q(q1, grid.q2_values[0]);
            let Ok(s1) = step1(train, &row_cfg) else {
                return vec![None; grid.q2_values.len()];
            };
            let Ok(importance) = ImportanceVector::new(s1.mean.mapv(f64::abs)) else {
                return vec![None; grid.q2_values.len()];
            };
            grid.q2_values
                .iter()
                .map(|&q2| {
                    let cfg = cfg_template.with_q(q1, q2);
                    let s2 = step2(train, &importance, &cfg).ok()?;
                    Some(assemble_model(train, importance.clone(), s1.diagnostics, s2, &cfg))
                })
                .collect()
        })
        .collect();
    Ok(GridFits { grid: grid.clone(), models })
}

/// Held-out MSE of every fitted cell; missing fits get `inf`.
pub fn score_grid(fits: &GridFits, held_out: &Dataset) -> Result<Array2<f64>> {
    let (r, c) = (fits.grid.q1_values.len(), fits.grid.q2_values.len());
    let mut table = Array2::from_elem((r, c), f64::INFINITY);
    for (i, row) in fits.models.iter().enumerate() {
        for (j, model) in row.iter().enumerate() {
            if let Some(m) = model {
                let pred = predict(&m.coefficients, held_out.x())?;
                table[[i, j]] = mean_squared_error(pred.view(), held_out.y());
            }
        }
    }
    Ok(table)
}

/// Scores within this relative distance of the minimum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Smallest finite entry; ties (up to [`TIE_TOLERANCE`]) go to the smaller `q1`, then the smaller `q2`.
pub fn argmin_cell(table: &Array2<f64>) -> Option<(usize, usize)> {
    let min = table.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let cutoff = min + TIE_TOLERANCE * min.abs();
    // indexed_iter walks rows first, i.e. lexicographic (q1, q2) order
    table.indexed_iter().find(|(_, v)| **v <= cutoff).map(|(cell, _)| cell)
}

pub fn tune_validation(
    train: &Dataset,
    valid: &Dataset,
    grid: &TuningGrid,
    cfg_template: &EnsembleConfig,
) -> Result<TuningResult> {
    if valid.p() != train.p() {
        return Err(Error::DimensionMismatch { expected: train.p(), got: valid.p() });
    }
    let mut fits = fit_grid(train, grid, cfg_template)?;
    let score_table = score_grid(&fits, valid)?;
    let (i, j) = argmin_cell(&score_table).ok_or(Error::AllCellsInfeasible)?;
    let model = fits.models[i][j].take().expect("finite score implies a fitted model");
    Ok(TuningResult {
        best_q1: grid.q1_values[i],
        best_q2: grid.q2_values[j],
        grid: grid.clone(),
        score_table,
        fold_tables: Vec::new(),
        model,
    })
}

/// Seeded fold label in `0..k` for each of `n` observations, fold sizes differing by at most one.
pub fn kfold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Domain::Folds, k as u64, Purpose::General));
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

pub fn tune_kfold(train: &Dataset, k: usize, grid: &TuningGrid, cfg_template: &EnsembleConfig) -> Result<TuningResult> {
    if k < 2 || k > train.n() {
        return Err(Error::InvalidParameter(format!("k must lie in 2..={}, got {k}", train.n())));
    }
    let folds = kfold_assignment(train.n(), k, cfg_template.seed);
    tune_with_folds(train, &folds, grid, cfg_template)
}

/// K-fold tuning with explicit fold labels; the score is the mean held-out MSE over folds.
pub fn tune_with_folds(
    train: &Dataset,
    folds: &[usize],
    grid: &TuningGrid,
    cfg_template: &EnsembleConfig,
) -> Result<TuningResult> {
    if folds.len() != train.n() {
        return Err(Error::DimensionMismatch { expected: train.n(), got: folds.len() });
    }
    grid.check(train.p())?;
    let k = folds.iter().max().map_or(0, |m| m + 1);
    let mut fold_tables = Vec::with_capacity(k);
    for fold in 0..k {
        let held: Vec<usize> = (0..train.n()).filter(|&i| folds[i] == fold).collect();
        let kept: Vec<usize> = (0..train.n()).filter(|&i| folds[i] != fold).collect();
        if held.is_empty() {
            continue;
        }
        if kept.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "fold {fold} leaves {} training observations; need at least 2",
                kept.len()
            )));
        }
        let fit_part = train.select_rows(&kept)?;
        let x_held = train.x().select(ndarray::Axis(0), &held);
        let y_held = train.y().select(ndarray::Axis(0), &held);
        let fits = fit_grid(&fit_part, grid, cfg_template)?;
        let mut table = Array2::from_elem((grid.q1_values.len(), grid.q2_values.len()), f64::INFINITY);
        for (i, row) in fits.models.iter().enumerate() {
            for (j, model) in row.iter().enumerate() {
                if let Some(m) = model {
                    let pred = predict(&m.coefficients, x_held.view())?;
                    table[[i, j]] = mean_squared_error(pred.view(), y_held.view());
                }
            }
        }
        fold_tables.push(table);
    }
    let mut score_table = Array2::zeros((grid.q1_values.len(), grid.q2_values.len()));
    for t in &fold_tables {
        score_table += t;
    }
    score_table /= fold_tables.len() as f64;
    let (i, j) = argmin_cell(&score_table).ok_or(Error::AllCellsInfeasible)?;
    let cfg = cfg_template.with_q(grid.q1_values[i], grid.q2_values[j]);
    let model = crate::ensemble::fit_random_lasso(train, &cfg)?;
    Ok(TuningResult {
        best_q1: cfg.q1,
        best_q2: cfg.q2,
        grid: grid.clone(),
        score_table,
        fold_tables,
        model,
    })
}
