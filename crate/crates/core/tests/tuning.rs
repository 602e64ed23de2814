mod common;

use common::{gaussian_matrix, gaussian_vector, rng};
use ndarray::{concatenate, Axis};
use rlasso::ensemble::EnsembleConfig;
use rlasso::simbench::{generate, ExampleId, SimulationSpec};
use rlasso::tuning::{fit_grid, tune_kfold, tune_validation, tune_with_folds, TuningGrid};
use rlasso::Dataset;

fn single_signal(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x = gaussian_matrix(&mut r, n, p);
    let y = x.column(0).mapv(|v| 5.0 * v);
    Dataset::new(x, y, None).unwrap()
}

fn noisy(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x = gaussian_matrix(&mut r, n, p);
    let y = x.column(0).mapv(|v| 2.0 * v) + x.column(2).mapv(|v| -v) + gaussian_vector(&mut r, n);
    Dataset::new(x, y, None).unwrap()
}

fn template(b: usize, seed: u64) -> EnsembleConfig {
    EnsembleConfig { b, seed, ..EnsembleConfig::new(1, 1) }
}

#[test]
fn one_cell_grid() {
    let train = noisy(30, 5, 1);
    let valid = noisy(30, 5, 2);
    let grid = TuningGrid::new(vec![3], vec![2], 5).unwrap();
    let res = tune_validation(&train, &valid, &grid, &template(20, 3)).unwrap();
    assert_eq!((res.best_q1, res.best_q2), (3, 2));
    assert_eq!(res.score_table.dim(), (1, 1));
}

#[test]
fn noiseless_grid_scores_and_tie_break() {
    // large enough that spurious step-1 importance of the noise columns is negligible
    let train = single_signal(1000, 8, 4);
    let valid = single_signal(1000, 8, 5);
    let grid = TuningGrid::square(vec![2, 8], 8).unwrap();
    let res = tune_validation(&train, &valid, &grid, &template(100, 6)).unwrap();
    for v in res.score_table.iter() {
        assert!(*v < 1e-2, "score table {}", res.score_table);
        assert!(*v >= 0.0);
    }
    assert_eq!((res.best_q1, res.best_q2), (2, 2), "score table {}", res.score_table);
}

#[test]
fn leave_one_out_runs() {
    let train = noisy(10, 4, 7);
    let grid = TuningGrid::square(vec![2, 4], 4).unwrap();
    let res = tune_kfold(&train, 10, &grid, &template(10, 8)).unwrap();
    assert_eq!(res.fold_tables.len(), 10);
    let min = res.score_table.iter().copied().fold(f64::INFINITY, f64::min);
    let (i, j) = (
        grid.q1_values.iter().position(|&q| q == res.best_q1).unwrap(),
        grid.q2_values.iter().position(|&q| q == res.best_q2).unwrap(),
    );
    assert_eq!(res.score_table[[i, j]], min);
}

#[test]
fn duplicated_rows_give_symmetric_folds() {
    let half = noisy(20, 4, 9);
    let x = concatenate(Axis(0), &[half.x(), half.x()]).unwrap();
    let y = concatenate(Axis(0), &[half.y(), half.y()]).unwrap();
    let doubled = Dataset::new(x, y, None).unwrap();
    let folds: Vec<usize> = (0..40).map(|i| i / 20).collect();
    let grid = TuningGrid::square(vec![2, 4], 4).unwrap();
    let res = tune_with_folds(&doubled, &folds, &grid, &template(15, 10)).unwrap();
    assert_eq!(res.fold_tables.len(), 2);
    for (a, b) in res.fold_tables[0].iter().zip(res.fold_tables[1].iter()) {
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }
}

#[test]
fn kfold_is_deterministic() {
    let train = noisy(25, 4, 11);
    let grid = TuningGrid::square(vec![2, 4], 4).unwrap();
    let a = tune_kfold(&train, 5, &grid, &template(10, 12)).unwrap();
    let b = tune_kfold(&train, 5, &grid, &template(10, 12)).unwrap();
    assert_eq!(a.score_table, b.score_table);
    assert_eq!(a.model.coefficients, b.model.coefficients);
    assert!(tune_kfold(&train, 1, &grid, &template(10, 12)).is_err());
    assert!(tune_kfold(&train, 26, &grid, &template(10, 12)).is_err());
}

#[test]
fn validation_data_only_affects_scores() {
    let train = noisy(30, 5, 13);
    let valid = noisy(30, 5, 14);
    let mut r = rng(15);
    let garbage = Dataset::new(gaussian_matrix(&mut r, 30, 5) * 100.0, gaussian_vector(&mut r, 30) * 50.0, None).unwrap();
    let grid = TuningGrid::square(vec![2, 5], 5).unwrap();
    let cfg = template(20, 16);
    let good = tune_validation(&train, &valid, &grid, &cfg).unwrap();
    let bad = tune_validation(&train, &garbage, &grid, &cfg).unwrap();
    assert_ne!(good.score_table, bad.score_table);
    let fits = fit_grid(&train, &grid, &cfg).unwrap();
    for res in [&good, &bad] {
        let i = grid.q1_values.iter().position(|&q| q == res.best_q1).unwrap();
        let j = grid.q2_values.iter().position(|&q| q == res.best_q2).unwrap();
        assert_eq!(fits.models[i][j].as_ref().unwrap().coefficients, res.model.coefficients);
    }
}

#[test]
fn example_two_prefers_small_first_step_subsets() {
    let spec = SimulationSpec::new(ExampleId::Ex2, 50, Some(6.0)).unwrap();
    let grid = TuningGrid::square(ExampleId::Ex2.q_grid(), 8).unwrap();
    let mut wins = [0usize; 4];
    for r in 0..30 {
        let (train, valid) = generate(&spec, 700 + r);
        let res = tune_validation(&train, &valid, &grid, &template(100, 800 + r)).unwrap();
        wins[grid.q1_values.iter().position(|&q| q == res.best_q1).unwrap()] += 1;
    }
    let top = *wins.iter().max().unwrap();
    assert_eq!(wins[0], top, "q1 wins over {{2,4,6,8}}: {wins:?}");
    assert!(wins[1..].iter().all(|&w| w < wins[0]), "q1 wins over {{2,4,6,8}}: {wins:?}");
}
