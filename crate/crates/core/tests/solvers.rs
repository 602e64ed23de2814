mod common;

use common::*;
use ndarray::Array1;
use proptest::prelude::*;
use rlasso::solvers::{
    fit_ols, fit_path, fit_penalized, fit_penalized_with, fit_ridge, fit_univariate, gcv_select, lambda_max, CdOptions,
    Gram, PenaltySpec,
};

#[test]
fn random_instances_match_oracle_and_certificate() {
    for k in 0..60 {
        let inst = random_instance(11, k);
        let spec = PenaltySpec::new(inst.lambda1, inst.lambda2, inst.weights.clone()).unwrap();
        let fit = fit_penalized(inst.x.view(), inst.y.view(), &spec).unwrap();
        assert!(fit.converged, "instance {k} did not converge");
        let w = inst.weights.as_ref();
        assert!(kkt_holds(inst.x.view(), inst.y.view(), fit.beta.view(), inst.lambda1, inst.lambda2, w, 1e-4), "instance {k}");
        let oracle = proximal_gradient(inst.x.view(), inst.y.view(), inst.lambda1, inst.lambda2, w, 1_000_000);
        let ours = criterion(inst.x.view(), inst.y.view(), fit.beta.view(), inst.lambda1, inst.lambda2, w);
        let theirs = criterion(inst.x.view(), inst.y.view(), oracle.view(), inst.lambda1, inst.lambda2, w);
        assert!((ours - theirs).abs() <= 1e-8 * (1.0 + theirs.abs()), "instance {k}: {ours} vs {theirs}");
        assert!((fit.objective - ours).abs() <= 1e-8 * (1.0 + ours.abs()));
    }
}

#[test]
fn unpenalized_fit_is_least_squares() {
    for k in 0..30 {
        let mut r = rng(100 + k);
        let n = 30 + (k as usize % 20);
        let p = 1 + (k as usize % 12);
        let (x, y) = centered(&gaussian_matrix(&mut r, n, p), &gaussian_vector(&mut r, n));
        let fit = fit_penalized(x.view(), y.view(), &PenaltySpec::lasso(0.0).unwrap()).unwrap();
        let ols = normal_equations(x.view(), y.view());
        assert!(max_abs_diff(fit.beta.view(), ols.view()) <= 1e-6);
        let closed = fit_ols(x.view(), y.view()).unwrap();
        assert!(max_abs_diff(closed.beta.view(), ols.view()) <= 1e-8);
    }
}

#[test]
fn orthonormal_design_soft_thresholds() {
    for k in 0..50 {
        let mut r = rng(200 + k);
        let n = 40;
        let p = 2 + (k as usize % 15);
        let x = orthonormal_centered(&mut r, n, p);
        let y = gaussian_vector(&mut r, n) * 2.0;
        let y = &y - y.mean().unwrap();
        let c = x.t().dot(&y);
        let lambda = 2.0 * c.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * (0.05 + 0.9 * (k as f64 / 50.0));
        let fit = fit_penalized(x.view(), y.view(), &PenaltySpec::lasso(lambda).unwrap()).unwrap();
        let expected = c.mapv(|v| soft(v, lambda / 2.0));
        assert!(max_abs_diff(fit.beta.view(), expected.view()) <= 1e-8, "instance {k}");
    }
}

#[test]
fn zero_solution_at_lambda_max() {
    let mut r = rng(3);
    let (x, y) = centered(&gaussian_matrix(&mut r, 30, 6), &gaussian_vector(&mut r, 30));
    let w = Array1::from(vec![0.5, 1.0, 2.0, 3.0, 0.7, 1.1]);
    let spec = PenaltySpec::adaptive(1.0, w.clone()).unwrap();
    let gram = Gram::new(x.view(), y.view());
    let lmax = lambda_max(gram.xty.view(), &spec);
    let c = x.t().dot(&y);
    let analytic = (0..6).map(|j| (2.0 * c[j] / w[j]).abs()).fold(0.0, f64::max);
    assert!((lmax - analytic).abs() <= 1e-12 * analytic);
    for factor in [1.0, 1.5, 10.0] {
        let fit = fit_penalized(x.view(), y.view(), &spec.with_lambda1(lmax * factor)).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
    }
    let below = fit_penalized(x.view(), y.view(), &spec.with_lambda1(lmax * 0.99)).unwrap();
    assert!(below.df >= 1);
}

#[test]
fn elastic_net_reduces_to_lasso_and_ridge() {
    for k in 0..20 {
        let mut r = rng(300 + k);
        let (x, y) = centered(&gaussian_matrix(&mut r, 35, 10), &gaussian_vector(&mut r, 35));
        let lambda = 5.0 + k as f64;
        let enet = fit_penalized(x.view(), y.view(), &PenaltySpec::elastic_net(lambda, 0.0).unwrap()).unwrap();
        let lasso = fit_penalized(x.view(), y.view(), &PenaltySpec::lasso(lambda).unwrap()).unwrap();
        assert!(max_abs_diff(enet.beta.view(), lasso.beta.view()) <= 1e-6);
        let lambda2 = 0.1 * (k + 1) as f64;
        let enet = fit_penalized(x.view(), y.view(), &PenaltySpec::elastic_net(0.0, lambda2).unwrap()).unwrap();
        let ridge = fit_ridge(x.view(), y.view(), lambda2).unwrap();
        assert!(max_abs_diff(enet.beta.view(), ridge.beta.view()) <= 1e-6);
    }
}

#[test]
fn weighted_lasso_matches_rescaled_problem() {
    for k in 0..20 {
        let mut r = rng(400 + k);
        let (x, y) = centered(&gaussian_matrix(&mut r, 40, 8), &gaussian_vector(&mut r, 40));
        let y = &y + &(x.column(0).to_owned() * 2.0);
        let w = Array1::from_shape_fn(8, |j| 0.3 + 0.4 * j as f64);
        let lambda = 4.0;
        let weighted = fit_penalized(x.view(), y.view(), &PenaltySpec::adaptive(lambda, w.clone()).unwrap()).unwrap();
        // x_j / w_j with the unweighted penalty, then b_j = b~_j / w_j
        let xt = &x / &w;
        let plain = fit_penalized(xt.view(), y.view(), &PenaltySpec::lasso(lambda).unwrap()).unwrap();
        let back = &plain.beta / &w;
        assert!(max_abs_diff(weighted.beta.view(), back.view()) <= 1e-6, "instance {k}");
    }
}

#[test]
fn path_df_grows_as_lambda_falls_on_orthonormal_design() {
    let mut r = rng(5);
    let x = orthonormal_centered(&mut r, 50, 12);
    let y = gaussian_vector(&mut r, 50) * 3.0;
    let y = &y - y.mean().unwrap();
    let path = fit_path(x.view(), y.view(), &PenaltySpec::lasso(0.0).unwrap(), 60, 1e-3).unwrap();
    assert!(path.fits[0].beta.iter().all(|b| *b == 0.0));
    // lambdas decrease, so df must not decrease along the path
    for pair in path.fits.windows(2) {
        assert!(pair[1].df >= pair[0].df);
    }
    let c = x.t().dot(&y);
    for (fit, &lambda) in path.fits.iter().zip(&path.lambdas) {
        let expected = c.iter().filter(|v| v.abs() > lambda / 2.0).count();
        assert_eq!(fit.df, expected);
    }
    assert_eq!(fit_path(x.view(), y.view(), &PenaltySpec::lasso(0.0).unwrap(), 2, 1e-3).unwrap().len(), 2);
}

#[test]
fn gcv_picks_sparse_models_on_pure_noise() {
    let mut small = 0;
    for trial in 0..100 {
        let mut r = rng(10_000 + trial);
        let (x, y) = centered(&gaussian_matrix(&mut r, 50, 8), &gaussian_vector(&mut r, 50));
        let path = fit_path(x.view(), y.view(), &PenaltySpec::lasso(0.0).unwrap(), 100, 1e-3).unwrap();
        let (_, fit) = gcv_select(&path, 50).unwrap();
        if fit.df <= 2 {
            small += 1;
        }
    }
    assert!(small >= 80, "only {small} of 100 noise fits had df <= 2");
}

#[test]
fn univariate_equals_ols_on_orthonormal_design() {
    let mut r = rng(6);
    let x = orthonormal_centered(&mut r, 30, 7);
    let y = gaussian_vector(&mut r, 30);
    let y = &y - y.mean().unwrap();
    let uni = fit_univariate(x.view(), y.view()).unwrap();
    let ols = normal_equations(x.view(), y.view());
    assert!(max_abs_diff(uni.view(), ols.view()) <= 1e-10);
}

#[test]
fn ridge_limits() {
    let mut r = rng(7);
    let (x, y) = centered(&gaussian_matrix(&mut r, 40, 5), &gaussian_vector(&mut r, 40));
    let huge = fit_ridge(x.view(), y.view(), 1e12).unwrap();
    assert!(huge.beta.dot(&huge.beta).sqrt() < 1e-6);
    let tiny = fit_ridge(x.view(), y.view(), 1e-10).unwrap();
    let ols = normal_equations(x.view(), y.view());
    assert!(max_abs_diff(tiny.beta.view(), ols.view()) <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweeps_never_increase_the_criterion(seed in 0u64..10_000, frac in 0.001f64..0.9, lambda2 in 0.0f64..5.0) {
        let mut r = rng(seed);
        let (x, y) = centered(&gaussian_matrix(&mut r, 25, 10), &gaussian_vector(&mut r, 25));
        let gram = Gram::new(x.view(), y.view());
        let spec = PenaltySpec::elastic_net(0.0, lambda2).unwrap();
        let spec = spec.with_lambda1(frac * lambda_max(gram.xty.view(), &spec));
        let one = CdOptions { max_sweeps: 1, ..CdOptions::default() };
        let mut beta = Array1::zeros(10);
        let mut last = criterion(x.view(), y.view(), beta.view(), spec.lambda1, lambda2, None);
        for _ in 0..40 {
            let fit = fit_penalized_with(x.view(), y.view(), &gram, &spec, Some(beta.view()), one);
            let now = criterion(x.view(), y.view(), fit.beta.view(), spec.lambda1, lambda2, None);
            prop_assert!(now <= last + 1e-10 * (1.0 + last.abs()));
            last = now;
            beta = fit.beta;
        }
    }

    #[test]
    fn converged_fits_carry_a_certificate(seed in 0u64..10_000, n in 5usize..50, p in 1usize..20, frac in 0.001f64..1.2) {
        let mut r = rng(seed);
        let (x, y) = centered(&gaussian_matrix(&mut r, n, p), &gaussian_vector(&mut r, n));
        let gram = Gram::new(x.view(), y.view());
        let spec = PenaltySpec::lasso(0.0).unwrap();
        let spec = spec.with_lambda1(frac * lambda_max(gram.xty.view(), &spec));
        let fit = fit_penalized(x.view(), y.view(), &spec).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(kkt_holds(x.view(), y.view(), fit.beta.view(), spec.lambda1, 0.0, None, 1e-4));
        prop_assert_eq!(fit.df, fit.beta.iter().filter(|b| **b != 0.0).count());
    }
}
