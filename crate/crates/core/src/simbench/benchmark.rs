use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines;
use super::examples::{generate, SimulationSpec};
use super::metrics::rme;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::tuning::{tune_validation, TuningGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OlsOrRidge,
    Lasso,
    AdaptiveLasso,
    ElasticNet,
    RandomLasso,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::OlsOrRidge, Method::Lasso, Method::AdaptiveLasso, Method::ElasticNet, Method::RandomLasso];

    pub fn name(self) -> &'static str {
        match self {
            Method::OlsOrRidge => "ols_or_ridge",
            Method::Lasso => "lasso",
            Method::AdaptiveLasso => "adaptive_lasso",
            Method::ElasticNet => "elastic_net",
            Method::RandomLasso => "random_lasso",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ols" | "ridge" | "ols_or_ridge" => Method::OlsOrRidge,
            "lasso" => Method::Lasso,
            "adaptive_lasso" | "alasso" | "adaptive" => Method::AdaptiveLasso,
            "elastic_net" | "enet" => Method::ElasticNet,
            "random_lasso" | "rlasso" => Method::RandomLasso,
            _ => return Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 30 replicates, `B = 100`, every other grid value.
    Ci,
    /// 100 replicates, `B = 200`, full grids.
    Full,
}

impl Preset {
    pub fn replicates(self) -> usize {
        match self {
            Preset::Ci => 30,
            Preset::Full => 100,
        }
    }

    pub fn bootstrap(self) -> usize {
        match self {
            Preset::Ci => 100,
            Preset::Full => 200,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ci" => Ok(Preset::Ci),
            "full" => Ok(Preset::Full),
            _ => Err(Error::InvalidParameter(format!("unknown preset '{s}'; expected ci or full"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub spec: SimulationSpec,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub master_seed: u64,
    pub grid: TuningGrid,
    /// Template for the ensemble; `q1`, `q2` and `seed` are overwritten per replicate.
    pub ensemble: EnsembleConfig,
    pub adaptive_exponent: f64,
    pub scale: bool,
}

impl BenchmarkConfig {
    /// Preset settings for a simulation example. Predictor scaling is off.
    pub fn from_preset(spec: SimulationSpec, preset: Preset, methods: Vec<Method>, master_seed: u64) -> Self {
        let p = spec.p();
        let full = TuningGrid { q1_values: spec.example_id.q_grid(), q2_values: spec.example_id.q_grid() };
        let grid = match preset {
            Preset::Full => full,
            Preset::Ci => full.halved(),
        };
        let mut ensemble = EnsembleConfig::new(p, p);
        ensemble.b = preset.bootstrap();
        ensemble.scale = false;
        Self {
            spec,
            methods,
            replicates: preset.replicates(),
            master_seed,
            grid,
            ensemble,
            adaptive_exponent: 1.0,
            scale: false,
        }
    }
}

/// Per-replicate estimates for every requested method.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub seed: u64,
    pub estimates: Vec<Array1<f64>>,
    pub rme: Vec<f64>,
    /// Chosen `(q1, q2)` when the ensemble is among the methods.
    pub ensemble_choice: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencySummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl FrequencySummary {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self { min: v[0], median: median_sorted(&v), max: v[v.len() - 1] })
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Magnitude above which a coefficient counts as selected (0 for the baselines).
    pub threshold: f64,
    pub mean_rme: f64,
    pub se_rme: f64,
    pub selection_frequency: Vec<f64>,
    pub important: Option<FrequencySummary>,
    pub unimportant: Option<FrequencySummary>,
    pub coef_mean: Vec<f64>,
    pub coef_se: Vec<f64>,
    pub pos_freq: Vec<f64>,
    pub neg_freq: Vec<f64>,
    pub median_selected_count: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub example: u32,
    pub n: usize,
    pub sigma: f64,
    pub replicates: usize,
    pub failed: usize,
    pub methods: Vec<MethodSummary>,
    pub ensemble_choices: Vec<(usize, usize)>,
    pub runtime_secs: f64,
}

impl BenchmarkReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

/// Fits every requested method on one simulated replicate.
pub fn run_replicate(cfg: &BenchmarkConfig, replicate: usize) -> Result<ReplicateOutcome> {
    let seed = derive_seed(cfg.master_seed, replicate as u64);
    let (train, valid) = generate(&cfg.spec, seed);
    let mut estimates = Vec::with_capacity(cfg.methods.len());
    let mut ensemble_choice = None;
    let sel = baselines::Selector::Validation(&valid);
    for &method in &cfg.methods {
        let beta = match method {
            Method::OlsOrRidge => baselines::ols_or_ridge(&train, &sel, cfg.scale)?.beta,
            Method::Lasso => baselines::lasso(&train, &sel, cfg.scale)?.coefficients.beta,
            Method::AdaptiveLasso => {
                baselines::adaptive_lasso(&train, &sel, cfg.adaptive_exponent, cfg.scale)?.coefficients.beta
            }
            Method::ElasticNet => baselines::elastic_net(&train, &sel, cfg.scale)?.coefficients.beta,
            Method::RandomLasso => {
                let mut template = cfg.ensemble.clone();
                template.seed = derive_seed(seed, 0xE5);
                let tuned = tune_validation(&train, &valid, &cfg.grid, &template)?;
                ensemble_choice = Some((tuned.best_q1, tuned.best_q2));
                tuned.model.coefficients.beta
            }
        };
        estimates.push(beta);
    }
    let rme = estimates
        .iter()
        .map(|b| rme(b.view(), cfg.spec.beta0.view(), &cfg.spec.covariance, cfg.spec.sigma))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateOutcome { seed, estimates, rme, ensemble_choice })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Aggregates replicate outcomes in index order.
pub fn summarize(cfg: &BenchmarkConfig, outcomes: &[ReplicateOutcome], failed: usize, runtime_secs: f64) -> BenchmarkReport {
    let p = cfg.spec.p();
    let important = cfg.spec.important();
    let is_important: Vec<bool> = (0..p).map(|j| important.contains(&j)).collect();
    let r = outcomes.len() as f64;
    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let threshold = if method == Method::RandomLasso { cfg.ensemble.threshold_rule.resolve(cfg.spec.n) } else { 0.0 };
            let rmes: Vec<f64> = outcomes.iter().map(|o| o.rme[m]).collect();
            let (mean_rme, se_rme) = mean_and_se(&rmes);
            let mut selection_frequency = vec![0.0; p];
            let mut pos_freq = vec![0.0; p];
            let mut neg_freq = vec![0.0; p];
            let mut coef_mean = vec![0.0; p];
            let mut coef_se = vec![0.0; p];
            let mut counts = Vec::with_capacity(outcomes.len());
            for o in outcomes {
                let beta = &o.estimates[m];
                let mut count = 0;
                for (j, &b) in beta.iter().enumerate() {
                    if b.abs() > threshold {
                        selection_frequency[j] += 1.0;
                        count += 1;
                    }
                    if b > threshold {
                        pos_freq[j] += 1.0;
                    } else if b < -threshold {
                        neg_freq[j] += 1.0;
                    }
                }
                counts.push(count as f64);
            }
            for j in 0..p {
                let column: Vec<f64> = outcomes.iter().map(|o| o.estimates[m][j]).collect();
                (coef_mean[j], coef_se[j]) = mean_and_se(&column);
                selection_frequency[j] /= r;
                pos_freq[j] /= r;
                neg_freq[j] /= r;
            }
            let iv: Vec<f64> = (0..p).filter(|&j| is_important[j]).map(|j| selection_frequency[j]).collect();
            let uv: Vec<f64> = (0..p).filter(|&j| !is_important[j]).map(|j| selection_frequency[j]).collect();
            counts.sort_by(f64::total_cmp);
            MethodSummary {
                method,
                threshold,
                mean_rme,
                se_rme,
                important: FrequencySummary::of(&iv),
                unimportant: FrequencySummary::of(&uv),
                selection_frequency,
                coef_mean,
                coef_se,
                pos_freq,
                neg_freq,
                median_selected_count: median_sorted(&counts),
            }
        })
        .collect();
    BenchmarkReport {
        example: cfg.spec.example_id.number(),
        n: cfg.spec.n,
        sigma: cfg.spec.sigma,
        replicates: outcomes.len(),
        failed,
        methods,
        ensemble_choices: outcomes.iter().filter_map(|o| o.ensemble_choice).collect(),
        runtime_secs,
    }
}

/// Runs all replicates in parallel on the current rayon pool, in replicate order.
///
/// Failed replicates are dropped and their count returned; more than 10% failures abort the run.
pub fn run_replicates(cfg: &BenchmarkConfig) -> Result<(Vec<ReplicateOutcome>, usize)> {
    if cfg.replicates < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 replicates, got {}", cfg.replicates)));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidParameter("no methods requested".into()));
    }
    let results: Vec<Result<ReplicateOutcome>> =
        (0..cfg.replicates).into_par_iter().map(|r| run_replicate(cfg, r)).collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed * 10 > cfg.replicates {
        return Err(Error::TooManyFailures { failed, total: cfg.replicates });
    }
    Ok((results.into_iter().filter_map(|r| r.ok()).collect(), failed))
}

/// [`run_replicates`] followed by [`summarize`].
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    let start = Instant::now();
    let (outcomes, failed) = run_replicates(cfg)?;
    Ok(summarize(cfg, &outcomes, failed, start.elapsed().as_secs_f64()))
}

/// Writes `rme.csv`, `selection.csv` and `signs.csv` into `dir`.
pub fn write_report(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut rme_file = std::fs::File::create(dir.join("rme.csv"))?;
    writeln!(rme_file, "method,mean_rme,se")?;
    for s in &report.methods {
        writeln!(rme_file, "{},{},{}", s.method, s.mean_rme, s.se_rme)?;
    }
    let mut sel = std::fs::File::create(dir.join("selection.csv"))?;
    writeln!(sel, "method,group,min,median,max")?;
    for s in &report.methods {
        for (group, summary) in [("IV", &s.important), ("UV", &s.unimportant)] {
            if let Some(f) = summary {
                writeln!(sel, "{},{group},{},{},{}", s.method, f.min, f.median, f.max)?;
            }
        }
    }
    let mut signs = std::fs::File::create(dir.join("signs.csv"))?;
    writeln!(signs, "method,variable,mean_coef,se,pos_freq,neg_freq")?;
    for s in &report.methods {
        for j in 0..s.coef_mean.len() {
            writeln!(
                signs,
                "{},x{},{},{},{},{}",
                s.method,
                j + 1,
                s.coef_mean[j],
                s.coef_se[j],
                s.pos_freq[j],
                s.neg_freq[j]
            )?;
        }
    }
    Ok(())
}
