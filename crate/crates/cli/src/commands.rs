use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rlasso::data::{
    read_coefficients, read_predictors, read_table, write_coefficients, write_named_column, write_table,
};
use rlasso::ensemble::{fit_random_lasso, EnsembleConfig, RandomLassoModel};
use rlasso::simbench::baselines::{self, Selector};
use rlasso::simbench::{
    generate, run_benchmark, write_report, BenchmarkConfig, ExampleId, Method, Preset, SimulationSpec,
};
use rlasso::solvers::fit_ridge;
use rlasso::tuning::{tune_kfold, tune_validation, TuningGrid, TuningResult};
use rlasso::{center, predict, CoefficientVector, Dataset};
use serde_json::{json, Value};

use crate::manifest::Recorder;
use crate::options::{parse_list, Bench, Common, Ensemble, Penalty, Prediction, Simulation, Training};

const DEFAULT_FOLDS: usize = 5;

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn example(sim: &Simulation) -> Result<ExampleId> {
    let k = sim.example.ok_or_else(|| anyhow!("--example is required"))?;
    Ok(ExampleId::from_number(k)?)
}

pub fn simulate(common: Common, sim: Simulation, seed: u64, mut rec: Recorder) -> Result<()> {
    let id = example(&sim)?;
    let spec = SimulationSpec::new(id, sim.n.unwrap_or(50), sim.sigma)?;
    let dir = out_dir(&common)?;
    let (train, valid) = generate(&spec, seed);
    write_table(&train, "y", &dir.join("train.csv"))?;
    write_table(&valid, "y", &dir.join("valid.csv"))?;
    let truth = CoefficientVector { beta: spec.beta0.clone(), intercept: 0.0 };
    write_coefficients(&truth, &train.column_names(), &dir.join("truth.csv"))?;
    rec.config(&common)?;
    rec.config(&sim)?;
    let details = json!({ "example": id.number(), "n": spec.n, "sigma": spec.sigma, "p": spec.p() });
    rec.finish(&dir, vec!["train.csv".into(), "valid.csv".into(), "truth.csv".into()], details)
}

struct Loaded {
    train: Dataset,
    valid: Option<Dataset>,
}

fn load(training: &Training, rec: &mut Recorder) -> Result<Loaded> {
    let path = training.train.as_ref().ok_or_else(|| anyhow!("--train is required"))?;
    let response = training.response.as_deref().unwrap_or("y");
    let train = read_table(path, response)?;
    rec.input("train", path)?;
    let valid = match &training.valid {
        Some(v) => {
            let d = read_table(v, response)?;
            if d.names() != train.names() {
                bail!("validation columns differ from training columns");
            }
            rec.input("valid", v)?;
            Some(d)
        }
        None => None,
    };
    Ok(Loaded { train, valid })
}

fn selector<'a>(loaded: &'a Loaded, training: &Training, seed: u64) -> Selector<'a> {
    match &loaded.valid {
        Some(v) => Selector::Validation(v),
        None => Selector::KFold { k: training.folds.unwrap_or(DEFAULT_FOLDS), seed },
    }
}

fn write_model_files(dir: &Path, names: &[String], model: &RandomLassoModel, outputs: &mut Vec<String>) -> Result<()> {
    let importance: Vec<(String, f64)> =
        names.iter().cloned().zip(model.importance.values().iter().copied()).collect();
    write_named_column(&dir.join("importance.csv"), &["name", "importance"], &importance)?;
    let selected: Vec<(String, f64)> = model.selected.iter().map(|&j| (names[j].clone(), model.beta()[j])).collect();
    write_named_column(&dir.join("selected.csv"), &["name", "coefficient"], &selected)?;
    outputs.extend(["importance.csv".to_string(), "selected.csv".to_string()]);
    Ok(())
}

fn write_tuning_table(dir: &Path, res: &TuningResult) -> Result<()> {
    let mut text = String::from("q1,q2,score\n");
    for (i, q1) in res.grid.q1_values.iter().enumerate() {
        for (j, q2) in res.grid.q2_values.iter().enumerate() {
            writeln!(text, "{q1},{q2},{}", res.score_table[[i, j]])?;
        }
    }
    std::fs::write(dir.join("tuning.csv"), text)?;
    Ok(())
}

fn ensemble_config(ens: &Ensemble, data: &Dataset, scale: bool, seed: u64) -> Result<EnsembleConfig> {
    let base = EnsembleConfig { seed, scale, ..EnsembleConfig::new(1, 1) };
    let cfg = ens.apply(base)?;
    Ok(cfg.with_q(ens.q1.unwrap_or(data.p()), ens.q2.unwrap_or(data.p())))
}

fn grid_for(ens: &Ensemble, p: usize) -> Result<TuningGrid> {
    let default = TuningGrid::default_for(p);
    let pick = |fixed: Option<usize>, list: &Option<String>, what: &str, fallback: Vec<usize>| -> Result<Vec<usize>> {
        Ok(match (fixed, list) {
            (Some(q), _) => vec![q],
            (None, Some(s)) => parse_list(s, what)?,
            (None, None) => fallback,
        })
    };
    let q1 = pick(ens.q1, &ens.q1_grid, "q1 grid", default.q1_values)?;
    let q2 = pick(ens.q2, &ens.q2_grid, "q2 grid", default.q2_values)?;
    Ok(TuningGrid::new(q1, q2, p)?)
}

/// Random lasso fit, tuned over the grid unless both subset sizes are fixed.
fn random_lasso(
    loaded: &Loaded,
    training: &Training,
    ens: &Ensemble,
    scale: bool,
    seed: u64,
    force_tuning: bool,
) -> Result<(RandomLassoModel, Option<TuningResult>)> {
    let cfg = ensemble_config(ens, &loaded.train, scale, seed)?;
    if ens.q1.is_some() && ens.q2.is_some() && !force_tuning {
        return Ok((fit_random_lasso(&loaded.train, &cfg)?, None));
    }
    let grid = grid_for(ens, loaded.train.p())?;
    let res = match &loaded.valid {
        Some(v) => tune_validation(&loaded.train, v, &grid, &cfg)?,
        None => tune_kfold(&loaded.train, training.folds.unwrap_or(DEFAULT_FOLDS), &grid, &cfg)?,
    };
    Ok((res.model.clone(), Some(res)))
}

pub fn fit(
    common: Common,
    training: Training,
    penalty: Penalty,
    ens: Ensemble,
    seed: u64,
    mut rec: Recorder,
) -> Result<()> {
    let method = penalty.method.clone().ok_or_else(|| anyhow!("--method is required"))?;
    let loaded = load(&training, &mut rec)?;
    let dir = out_dir(&common)?;
    let scale = training.scale.unwrap_or(true);
    let names = loaded.train.column_names();
    let sel = selector(&loaded, &training, seed);
    let train = &loaded.train;
    let mut outputs = vec!["coefficients.csv".to_string()];
    let (coefficients, details): (CoefficientVector, Value) = match method.as_str() {
        "ols" => (baselines::ols(train, scale)?, json!({})),
        "lasso" => match penalty.lambda {
            Some(l) => (baselines::fixed(train, l, 0.0, None, scale)?, json!({ "lambda": l })),
            None => {
                let f = baselines::lasso(train, &sel, scale)?;
                (f.coefficients, json!({ "lambda": f.lambda1, "held_out_mse": f.valid_mse }))
            }
        },
        "enet" | "elastic_net" => match (penalty.lambda, penalty.lambda2) {
            (Some(l1), Some(l2)) => {
                (baselines::fixed(train, l1, l2, None, scale)?, json!({ "lambda": l1, "lambda2": l2 }))
            }
            (Some(_), None) => bail!("a fixed --lambda for enet also needs --lambda2"),
            (None, Some(l2)) => {
                let f = baselines::validated_path(train, &sel, l2, None, scale)?;
                (f.coefficients, json!({ "lambda": f.lambda1, "lambda2": l2, "held_out_mse": f.valid_mse }))
            }
            (None, None) => {
                let f = baselines::elastic_net(train, &sel, scale)?;
                let d = json!({ "lambda": f.lambda1, "lambda2": f.lambda2, "held_out_mse": f.valid_mse });
                (f.coefficients, d)
            }
        },
        "adaptive" | "adaptive_lasso" => {
            let r = ens.adaptive_exponent.unwrap_or(1.0);
            let pilot = baselines::ols_or_ridge(train, &sel, scale)?;
            let weights = baselines::adaptive_weights(train, &pilot, r, scale);
            match penalty.lambda {
                Some(l) => (baselines::fixed(train, l, 0.0, Some(weights), scale)?, json!({ "lambda": l })),
                None => {
                    let f = baselines::validated_path(train, &sel, 0.0, Some(weights), scale)?;
                    (f.coefficients, json!({ "lambda": f.lambda1, "held_out_mse": f.valid_mse }))
                }
            }
        }
        "ridge" => match penalty.lambda2 {
            Some(l2) => {
                let view = center(train, scale);
                let fit = fit_ridge(view.xc.view(), view.yc.view(), l2)?;
                (view.to_original(fit.beta.view()), json!({ "lambda2": l2 }))
            }
            None => {
                let f = baselines::ridge(train, &sel, scale)?;
                (f.coefficients, json!({ "lambda2": f.lambda2, "held_out_mse": f.valid_mse }))
            }
        },
        "random_lasso" | "rlasso" => {
            let (model, tuning) = random_lasso(&loaded, &training, &ens, scale, seed, false)?;
            write_model_files(&dir, &names, &model, &mut outputs)?;
            if let Some(res) = &tuning {
                write_tuning_table(&dir, res)?;
                outputs.push("tuning.csv".into());
            }
            let d = json!({
                "q1": model.config.q1,
                "q2": model.config.q2,
                "b": model.config.b,
                "t_n": model.t_n,
                "selected": model.selected.len(),
                "retried_fits": model.diagnostics.retried,
                "failed_fits": model.diagnostics.failed,
            });
            (model.coefficients, d)
        }
        other => bail!("unknown method '{other}' (expected lasso, adaptive, enet, ridge, ols or random_lasso)"),
    };
    write_coefficients(&coefficients, &names, &dir.join("coefficients.csv"))?;
    rec.config(&common)?;
    rec.config(&training)?;
    rec.config(&penalty)?;
    rec.config(&ens)?;
    let mut details = details;
    details["method"] = json!(method);
    rec.finish(&dir, outputs, details)
}

pub fn tune(common: Common, training: Training, ens: Ensemble, seed: u64, mut rec: Recorder) -> Result<()> {
    let loaded = load(&training, &mut rec)?;
    let dir = out_dir(&common)?;
    let scale = training.scale.unwrap_or(true);
    let names = loaded.train.column_names();
    let (model, res) = random_lasso(&loaded, &training, &ens, scale, seed, true)?;
    let res = res.expect("tuning was forced");
    let mut outputs = vec!["tuning.csv".to_string(), "coefficients.csv".to_string()];
    write_tuning_table(&dir, &res)?;
    write_coefficients(&model.coefficients, &names, &dir.join("coefficients.csv"))?;
    write_model_files(&dir, &names, &model, &mut outputs)?;
    rec.config(&common)?;
    rec.config(&training)?;
    rec.config(&ens)?;
    let details = json!({ "best_q1": res.best_q1, "best_q2": res.best_q2, "t_n": model.t_n });
    rec.finish(&dir, outputs, details)
}

pub fn predict_cmd(common: Common, pred: Prediction, mut rec: Recorder) -> Result<()> {
    let model_path = pred.model.as_ref().ok_or_else(|| anyhow!("--model is required"))?;
    let x_path = pred.x.as_ref().ok_or_else(|| anyhow!("--x is required"))?;
    let (names, coef) = read_coefficients(model_path)?;
    let x = read_predictors(x_path, &names)?;
    rec.input("model", model_path)?;
    rec.input("x", x_path)?;
    let yhat = predict(&coef, x.view())?;
    let dir = out_dir(&common)?;
    let rows: Vec<(String, f64)> = yhat.iter().enumerate().map(|(i, v)| ((i + 1).to_string(), *v)).collect();
    write_named_column(&dir.join("predictions.csv"), &["row", "prediction"], &rows)?;
    rec.config(&common)?;
    rec.config(&pred)?;
    rec.finish(&dir, vec!["predictions.csv".into()], json!({ "rows": rows.len() }))
}

pub fn benchmark(
    common: Common,
    sim: Simulation,
    ens: Ensemble,
    bench: Bench,
    seed: u64,
    mut rec: Recorder,
) -> Result<()> {
    let id = example(&sim)?;
    let spec = SimulationSpec::new(id, sim.n.unwrap_or(50), sim.sigma)?;
    let preset: Preset = bench.preset.as_deref().unwrap_or("ci").parse()?;
    let methods: Vec<Method> = match &bench.methods {
        Some(s) => s.split(',').map(|m| m.trim().parse()).collect::<rlasso::Result<_>>()?,
        None => Method::ALL.to_vec(),
    };
    let mut cfg = BenchmarkConfig::from_preset(spec, preset, methods, seed);
    if let Some(r) = bench.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = bench.scale {
        cfg.scale = s;
        cfg.ensemble.scale = s;
    }
    cfg.ensemble = ens.apply(cfg.ensemble)?;
    if let Some(r) = ens.adaptive_exponent {
        cfg.adaptive_exponent = r;
    }
    let p = cfg.spec.p();
    if let Some(s) = &ens.q1_grid {
        cfg.grid.q1_values = parse_list(s, "q1 grid")?;
    }
    if let Some(s) = &ens.q2_grid {
        cfg.grid.q2_values = parse_list(s, "q2 grid")?;
    }
    cfg.grid = TuningGrid::new(cfg.grid.q1_values.clone(), cfg.grid.q2_values.clone(), p)?;
    let dir = out_dir(&common)?;
    let report = run_benchmark(&cfg)?;
    write_report(&report, &dir)?;
    rec.config(&common)?;
    rec.config(&sim)?;
    rec.config(&ens)?;
    rec.config(&bench)?;
    let details = json!({
        "example": report.example,
        "n": report.n,
        "sigma": report.sigma,
        "p": p,
        "preset": format!("{preset:?}").to_lowercase(),
        "replicates": report.replicates,
        "failed_replicates": report.failed,
        "bootstrap": cfg.ensemble.b,
        "q1_grid": cfg.grid.q1_values,
        "q2_grid": cfg.grid.q2_values,
        "methods": cfg.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "ensemble_choices": report.ensemble_choices,
        "runtime_secs": report.runtime_secs,
    });
    rec.finish(&dir, vec!["rme.csv".into(), "selection.csv".into(), "signs.csv".into()], details)
}
