use ndarray::{array, Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rlasso::simbench::{
    baselines, generate, mvn_sample, rme, run_benchmark, snr, BenchmarkConfig, ExampleId, Method, Preset,
    SimulationSpec,
};

fn sample_covariance(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
    let c = x - &mean;
    c.t().dot(&c) / (n - 1.0)
}

#[test]
fn mvn_identity_covariance() {
    let x = mvn_sample(&Array2::eye(2), 10_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let s = sample_covariance(&x);
    for ((i, j), v) in s.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        assert!((v - target).abs() <= 0.05, "entry ({i},{j}) = {v}");
    }
}

#[test]
fn mvn_correlated_pair() {
    let cov = array![[1.0, 0.9], [0.9, 1.0]];
    let x = mvn_sample(&cov, 10_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let s = sample_covariance(&x);
    let r = s[[0, 1]] / (s[[0, 0]] * s[[1, 1]]).sqrt();
    assert!((r - 0.9).abs() <= 0.02, "correlation {r}");
    let again = mvn_sample(&cov, 10_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(x, again);
}

#[test]
fn example_snr_values() {
    let b = ExampleId::Ex1.beta0();
    let cov = ExampleId::Ex1.covariance();
    let values: Vec<f64> = [1.0, 3.0, 6.0].iter().map(|&s| snr(b.view(), &cov, s).unwrap()).collect();
    assert!((values[0] - 21.25).abs() < 1e-12);
    assert!((values[1] - 21.25 / 9.0).abs() < 1e-12);
    assert!((values[2] - 21.25 / 36.0).abs() < 1e-12);
    let rounded: Vec<f64> = values.iter().map(|v| (v * 10.0).round() / 10.0).collect();
    assert_eq!(rounded, vec![21.3, 2.4, 0.6]);
    assert_eq!(snr(Array1::zeros(8).view(), &cov, 1.0).unwrap(), 0.0);
    assert!(snr(b.view(), &cov, 0.0).is_err());
}

#[test]
fn metrics_are_permutation_invariant() {
    let b0 = ExampleId::Ex3.beta0();
    let cov = ExampleId::Ex3.covariance();
    let p = b0.len();
    let bhat = Array1::from_shape_fn(p, |j| b0[j] + 0.1 * ((j * 7 % 11) as f64 - 5.0));
    let perm: Vec<usize> = (0..p).map(|j| (j * 17 + 3) % p).collect();
    let pb0 = Array1::from_shape_fn(p, |j| b0[perm[j]]);
    let pbhat = Array1::from_shape_fn(p, |j| bhat[perm[j]]);
    let pcov = Array2::from_shape_fn((p, p), |(a, b)| cov[[perm[a], perm[b]]]);
    let a = rme(bhat.view(), b0.view(), &cov, 3.0).unwrap();
    let b = rme(pbhat.view(), pb0.view(), &pcov, 3.0).unwrap();
    assert!((a - b).abs() <= 1e-12 * a);
    let s1 = snr(b0.view(), &cov, 3.0).unwrap();
    let s2 = snr(pb0.view(), &pcov, 3.0).unwrap();
    assert!((s1 - s2).abs() <= 1e-12 * s1);
    assert!(a > 0.0);
    assert_eq!(rme(b0.view(), b0.view(), &cov, 3.0).unwrap(), 0.0);
    let e1 = Array1::from_shape_fn(3, |j| if j == 0 { 1.0 } else { 0.0 });
    assert_eq!(rme(e1.view(), Array1::zeros(3).view(), &Array2::eye(3), 1.0).unwrap(), 1.0);
}

#[test]
fn ols_relative_model_error_on_example_one() {
    let spec = SimulationSpec::new(ExampleId::Ex1, 50, Some(1.0)).unwrap();
    let mut total = 0.0;
    for r in 0..100 {
        let (train, _) = generate(&spec, 5_000 + r);
        let b = baselines::ols(&train, false).unwrap();
        total += rme(b.beta.view(), spec.beta0.view(), &spec.covariance, 1.0).unwrap();
    }
    let mean = total / 100.0;
    // E[RME] = p / (n - p - 2) for a centered Gaussian design
    let analytic = 8.0 / (50.0 - 8.0 - 2.0);
    assert!((mean - analytic).abs() <= 0.03, "mean OLS RME {mean}");
    assert!((mean - 0.212).abs() <= 0.04, "mean OLS RME {mean}");
}

#[test]
fn example_dimensions() {
    for (id, p) in [(ExampleId::Ex1, 8), (ExampleId::Ex3, 40), (ExampleId::Ex5, 120)] {
        let (train, valid) = generate(&SimulationSpec::new(id, 50, None).unwrap(), 1);
        assert_eq!((train.n(), train.p()), (50, p));
        assert_eq!((valid.n(), valid.p()), (50, p));
    }
    let ex5 = ExampleId::Ex5.beta0();
    assert_eq!(ex5.iter().position(|b| *b == 0.0), Some(60));
    assert!(ex5.iter().skip(60).all(|b| *b == 0.0));
}

#[test]
fn two_replicate_report() {
    let spec = SimulationSpec::new(ExampleId::Ex1, 50, None).unwrap();
    let mut cfg = BenchmarkConfig::from_preset(spec, Preset::Ci, vec![Method::Lasso], 8);
    cfg.replicates = 2;
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.replicates, 2);
    let lasso = report.method(Method::Lasso).unwrap();
    assert!(lasso.mean_rme > 0.0 && lasso.se_rme >= 0.0);
    for f in lasso.selection_frequency.iter().chain(&lasso.pos_freq).chain(&lasso.neg_freq) {
        assert!((0.0..=1.0).contains(f));
    }
}

#[test]
fn example_four_third_sign() {
    let spec = SimulationSpec::new(ExampleId::Ex4, 50, None).unwrap();
    let mut cfg = BenchmarkConfig::from_preset(spec, Preset::Ci, vec![Method::ElasticNet, Method::RandomLasso], 41);
    cfg.replicates = 12;
    let report = run_benchmark(&cfg).unwrap();
    let rl = report.method(Method::RandomLasso).unwrap().neg_freq[2];
    let en = report.method(Method::ElasticNet).unwrap().neg_freq[2];
    assert!(rl > en, "negative-sign frequency for the third coefficient: {rl} vs {en}");
}
